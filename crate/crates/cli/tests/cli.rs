use std::fs;
use std::path::Path;
use std::process::Command;

use cgo_cli::{emit_contour_dump, run, ConfigError, ExperimentConfig, RunOptions};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(text).unwrap()
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out: Some(dir.to_path_buf()),
        workers: Some(2),
        seedless: true,
    }
}

const VALIDATE: &str = r#"{
    "domain": {"kind": "ellipse", "a": 1.5, "b": 1.0},
    "z_points": [[0.1, 0.05], [3.0, 0.5]],
    "k_sweep": {"arg": 0.7, "moduli": [1, 5, 10]},
    "experiment": "validate"
}"#;

#[test]
fn validate_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&config(VALIDATE), &opts(dir.path())).unwrap();
    assert!(report.passed);
    assert_eq!(report.cases, 6);
    assert_eq!(report.flags[0].criterion, "oracle_equivalence");
    let csv = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("z_re,z_im,modulus,arg,f_area_re"));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("validate.json")).unwrap()).unwrap();
    assert!(json["summary"]["max_rel_diff"].as_f64().unwrap() <= 1e-6);
    assert_eq!(json["provenance"]["config"]["experiment"], "validate");
    assert_eq!(json["flags"][0]["criterion_number"], 1);
}

#[test]
fn reports_are_deterministic_across_worker_counts() {
    let cfg = config(
        r#"{
        "domain": {"kind": "perturbed_circle", "radius": 1.0, "perturbation": [[3, 0.05, 0.0]]},
        "z_points": [[3.0, 0.5], [0.2, 0.1]],
        "k_sweep": {"arg": 0.3, "moduli": {"from": 20, "to": 60, "count": 5}},
        "experiment": "decompose"
    }"#,
    );
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(&cfg, &opts(a.path())).unwrap();
    run(&cfg, &RunOptions { workers: Some(1), ..opts(b.path()) }).unwrap();
    let read = |d: &Path| fs::read(d.join("decompose.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn decay_slope_outside() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{
        "domain": {"kind": "ellipse", "a": 1.0, "b": 1.0},
        "z_points": [[3.0, 0.5]],
        "k_sweep": {"arg": 0.7, "moduli": {"from": 20, "to": 200, "count": 40}},
        "experiment": "decay"
    }"#,
    );
    let report = run(&cfg, &opts(dir.path())).unwrap();
    let slope = report.summary["slopes"][0]["slope"].as_f64().unwrap();
    assert!((slope + 1.5).abs() <= 0.15, "{slope}");
    assert!(report.passed);
}

#[test]
fn decompose_ellipse_identity() {
    let dir = tempfile::tempdir().unwrap();
    // |k| = 50 and arg k = atan(4/3) give k = 30 + 40i
    let cfg = config(
        r#"{
        "domain": {"kind": "ellipse", "a": 2.0, "b": 1.0},
        "z_points": [[0.3, 0.2], [3.0, 1.0]],
        "k_sweep": {"arg": 0.9272952180016122, "moduli": [50]},
        "experiment": "decompose"
    }"#,
    );
    let report = run(&cfg, &opts(dir.path())).unwrap();
    assert!(report.passed, "{:?}", report.flags);
    let csv = fs::read_to_string(dir.path().join("decompose.csv")).unwrap();
    assert!(csv.lines().next().unwrap().contains("abs_term_corr"));
}

#[test]
fn failing_cases_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{
        "domain": {"kind": "ellipse", "a": 1.0, "b": 1.0},
        "z_points": [[1.0, 0.0], [3.0, 0.0]],
        "k_sweep": {"arg": 0.0, "moduli": [5]},
        "experiment": "validate"
    }"#,
    );
    let report = run(&cfg, &opts(dir.path())).unwrap();
    assert!(!report.passed);
    assert_eq!(report.failed_cases, 1);
    let csv = fs::read_to_string(dir.path().join("validate.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert!(rows[1].contains("boundary"));
    assert!(rows[2].ends_with(','));
}

#[test]
fn config_errors() {
    let empty = config(r#"{"domain": {"kind": "ellipse", "a": 1, "b": 1}, "z_points": [[2, 0]], "k_sweep": {"arg": 0, "moduli": []}, "experiment": "validate"}"#);
    let dir = tempfile::tempdir().unwrap();
    let err = run(&empty, &opts(dir.path())).unwrap_err();
    assert!(err.downcast_ref::<ConfigError>().is_some());
    assert!(emit_contour_dump(&empty, &opts(dir.path())).unwrap_err().downcast_ref::<ConfigError>().is_some());
    let decreasing = config(r#"{"domain": {"kind": "ellipse", "a": 1, "b": 1}, "z_points": [[2, 0]], "k_sweep": {"arg": 0, "moduli": [5, 2]}, "experiment": "validate"}"#);
    assert!(run(&decreasing, &opts(dir.path())).unwrap_err().downcast_ref::<ConfigError>().is_some());
    let bad_tol = config(r#"{"domain": {"kind": "ellipse", "a": 1, "b": 1}, "z_points": [[2, 0]], "k_sweep": {"arg": 0, "moduli": [5]}, "experiment": "validate", "tolerances": {"oracle": -1}}"#);
    assert!(run(&bad_tol, &opts(dir.path())).unwrap_err().downcast_ref::<ConfigError>().is_some());
    assert!(ExperimentConfig::from_json(r#"{"domain": {"kind": "ellipse", "a": 1, "b": 1}, "k_sweep": {"arg": 0, "moduli": [1]}, "experiment": "fly"}"#).is_err());
    assert!(ExperimentConfig::from_json(r#"{"domain": {"kind": "ellipse", "a": 1, "b": 1}, "k_sweep": {"arg": 0, "moduli": [1]}, "experiment": "decay", "typo": 1}"#).is_err());
}

#[test]
fn contour_dump_header_and_decay() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{
        "domain": {"kind": "ellipse", "a": 1.0, "b": 1.0},
        "k_sweep": {"arg": 1.5707963267948966, "moduli": [100]},
        "experiment": "contour_cost"
    }"#,
    );
    let paths = emit_contour_dump(&cfg, &opts(dir.path())).unwrap();
    let text = fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,s,re_w,im_w,re_u,im_u,abs_exp");
    // |exp(-iu)| is 1 at the poles and decays away from them
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    let peak = rows.iter().map(|r| r[6]).fold(0.0, f64::max);
    assert!(peak <= 1.0 + 1e-9 && peak > 0.99);
    let far = rows.iter().filter(|r| r[6] < 1e-10).count();
    assert!(far > rows.len() / 2);
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cgo"))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, VALIDATE).unwrap();
    let status = binary()
        .args(["run", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path())
        .args(["--workers", "2", "--seedless"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, VALIDATE.replace("[1, 5, 10]", "[]")).unwrap();
    let status = binary().args(["run", "--config"]).arg(&bad).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let failing = dir.path().join("failing.json");
    // an unattainable threshold turns the flag into a numerical failure
    let text = VALIDATE.replace("\"validate\"", "\"validate\", \"thresholds\": {\"oracle_rel_diff\": 1e-30}");
    fs::write(&failing, text).unwrap();
    let status = binary()
        .args(["run", "--config"])
        .arg(&failing)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::from_path(&path).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        count += 1;
    }
    assert!(count >= 5);
}
