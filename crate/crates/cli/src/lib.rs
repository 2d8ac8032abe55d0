//! Experiment runner for the large-`|k|` validation suite.
//!
//! A run reads an [`ExperimentConfig`], evaluates every `(z, |k|)` case of the
//! sweep in a worker pool, and writes `<experiment>.csv` (one row per case, in
//! declared order) and `<experiment>.json` (summary, flags, provenance).

pub mod config;
pub mod experiments;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use cgo_core::almost_holo::{extension_coeffs, PhaseExtension};
use cgo_core::contour::build_contour_with_poles;
use cgo_core::phase::{find_poles, SpectralParam};
use cgo_core::Complex64;

pub use config::{ConfigError, Experiment, ExperimentConfig};
pub use report::{Flag, Report};

/// Options given on the command line.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// Accepted for interface compatibility: no experiment draws random numbers.
    pub seedless: bool,
}

fn output_dir(config: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(ConfigError("--workers must be positive".into()).into());
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

/// Runs the configured experiment and writes its CSV and JSON files.
pub fn run(config: &ExperimentConfig, opts: &RunOptions) -> Result<Report> {
    let validated = config.validate()?;
    let pool = pool(opts.workers)?;
    let outcome = pool.install(|| experiments::run_experiment(&validated))?;
    let name = config.experiment.name();
    let dir = output_dir(config, opts);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let report = Report {
        experiment: name,
        cases: validated.z_points.len() * validated.moduli.len(),
        failed_cases: outcome.failed_cases,
        summary: outcome.summary,
        passed: outcome.flags.iter().all(|f| f.passed),
        flags: outcome.flags,
        provenance: report::Provenance {
            config: config.clone(),
            code_version: env!("CARGO_PKG_VERSION"),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            workers: pool.current_num_threads(),
            seedless: opts.seedless,
        },
    };
    write(&dir.join(format!("{name}.csv")), &outcome.csv)?;
    write(&dir.join(format!("{name}.json")), serde_json::to_string_pretty(&report)?.as_bytes())?;
    Ok(report)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// Writes `contour_<i>.csv` for every modulus of the sweep; returns the paths.
pub fn emit_contour_dump(config: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let (domain, moduli) = config.validate_for_dump()?;
    let dir = output_dir(config, opts);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let k0 = SpectralParam::new(Complex64::from_polar(moduli[0], config.k_sweep.arg))?;
    let poles = find_poles(domain.boundary(), &k0)?;
    let ext0 = extension_coeffs(&domain, &k0, config.order)?;
    let mut paths = Vec::new();
    for (i, &m) in moduli.iter().enumerate() {
        let k = k0.with_modulus(m)?;
        let ext: Arc<dyn PhaseExtension> = Arc::new(ext0.with_modulus(m));
        let contour = build_contour_with_poles(&domain, &k, &poles, ext, &config.contour)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in contour.dump_rows() {
            w.serialize(row)?;
        }
        let path = dir.join(format!("contour_{i}.csv"));
        write(&path, &w.into_inner().map_err(|e| e.into_error())?)?;
        paths.push(path);
    }
    Ok(paths)
}
