use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cgo_cli::{emit_contour_dump, run, ConfigError, ExperimentConfig, RunOptions};
use clap::{Parser, Subcommand};

/// Experiment runner for the large-|k| validation suite.
///
/// Exit status: 0 when every acceptance flag passes, 1 on a numerical
/// failure, 2 on a configuration error.
#[derive(Parser)]
#[command(name = "cgo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// No experiment is random; accepted so scripts can pass it uniformly.
        #[arg(long)]
        seedless: bool,
    },
    /// Write the deformed contour and |exp(-iu)| for every modulus of the sweep.
    DumpContour {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seedless,
        } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let report = run(&cfg, &RunOptions { out, workers, seedless })?;
            for flag in &report.flags {
                let verdict = if flag.passed { "PASS" } else { "FAIL" };
                println!("{verdict} criterion {} {}: {}", flag.criterion_number, flag.criterion, flag.detail);
            }
            Ok(report.passed)
        }
        Command::DumpContour { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            for path in emit_contour_dump(&cfg, &RunOptions { out, ..Default::default() })? {
                println!("{}", path.display());
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
