use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

use cdch_core::geometry::GridDump;

fn cdch(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cdch")).args(args).output().expect("spawn cdch");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn run(dir: &Path, name: &str, manifest: Value, extra: &[&str]) -> (i32, Value) {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, manifest.to_string()).unwrap();
    let out = dir.join(name);
    let mut args = vec!["run", "--manifest", path.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let (code, _) = cdch(&args);
    let report = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    (code, report)
}

#[test]
fn radial_report_has_closed_form_energy() {
    let dir = tempfile::tempdir().unwrap();
    let (code, report) = run(dir.path(), "radial", json!({"command": "radial", "numerics": {"n": 3, "alpha": 0.5, "R": 0.5}}), &[]);
    assert_eq!(code, 0);
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys, ["command", "errors", "inputs", "provenance", "results"]);
    assert!((report["results"]["energy"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(dir.path().join("radial/profile.csv").exists());
    assert_eq!(report["provenance"]["manifest_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn zero_measure_gives_zero_solution() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = json!({"command": "solve", "domain": {"kind": "disk"}, "numerics": {"resolution": 32}});
    let (code, report) = run(dir.path(), "zero", manifest, &[]);
    assert_eq!(code, 0);
    assert_eq!(report["results"]["max_abs"].as_f64(), Some(0.0));
    let csv = std::fs::read_to_string(dir.path().join("zero/u.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.split(',').nth(4) == Some("0e0")));
}

#[test]
fn grid_dumps_agree() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = json!({"command": "solve", "domain": {"kind": "koch_prefractal", "params": {"level": 1}}, "numerics": {"resolution": 32}});
    let (code, _) = run(dir.path(), "koch", manifest, &[]);
    assert_eq!(code, 0);
    let bin = GridDump::from_bytes(&std::fs::read(dir.path().join("koch/grid.bin")).unwrap()).unwrap();
    let text: GridDump = serde_json::from_str(&std::fs::read_to_string(dir.path().join("koch/grid.json")).unwrap()).unwrap();
    assert_eq!(bin, text);
}

#[test]
fn validate_reports_exact_messages() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, json!({"command": "solve", "domain": {"kind": "unit_square"}, "numerics": {"resolution": 48}}).to_string()).unwrap();
    let (code, stdout) = cdch(&["validate", "--manifest", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(stdout.trim(), "resolution must be a power of two in [32,1024]");

    let ok = dir.path().join("ok.json");
    std::fs::write(&ok, json!({"command": "radial", "numerics": {"n": 4, "alpha": 0.3, "R": 0.2}}).to_string()).unwrap();
    assert_eq!(cdch(&["validate", "--manifest", ok.to_str().unwrap()]).0, 0);
}

#[test]
fn run_refuses_short_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = json!({
        "command": "rate",
        "domain": {"kind": "unit_square"},
        "coefficient": {"type": "periodic", "preset": {"kind": "layered"}},
        "numerics": {"eps_list": [0.25, 0.125]}
    });
    let (code, report) = run(dir.path(), "rate", manifest, &[]);
    assert_eq!(code, 2);
    assert_eq!(report["errors"][0]["message"], json!("eps_list requires ≥ 4 values"));
    assert_eq!(report["errors"][0]["class"], json!("validation"));
    assert!(report["results"].is_null());
}

#[test]
fn solver_failure_exits_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = json!({
        "command": "solve",
        "domain": {"kind": "unit_square"},
        "measure": {"terms": [{"kind": "grid_density", "density": {"type": "constant", "value": 1.0}}]},
        "numerics": {"resolution": 64, "max_iter": 2}
    });
    let (code, report) = run(dir.path(), "stall", manifest, &[]);
    assert_eq!(code, 3);
    assert_eq!(report["errors"][0]["kind"], json!("NoConvergence"));
    assert_eq!(report["errors"][0]["class"], json!("numerical"));
}

#[test]
fn reruns_are_identical_but_for_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = json!({"command": "cdc-scan", "domain": {"kind": "unit_square"}, "numerics": {"resolution": 32, "samples": 6}});
    let (_, mut a) = run(dir.path(), "a", manifest.clone(), &["--seed", "7", "--threads", "1"]);
    let (_, mut b) = run(dir.path(), "b", manifest, &["--seed", "7", "--threads", "1"]);
    assert_eq!(a["provenance"]["seed"], json!(7));
    a["provenance"]["timestamp"] = Value::Null;
    b["provenance"]["timestamp"] = Value::Null;
    assert_eq!(a, b);
    let csv = |d: &str| std::fs::read(dir.path().join(d).join("cdc.csv")).unwrap();
    assert_eq!(csv("a"), csv("b"));
}

#[test]
fn layered_rate_manifest_reaches_half_order() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = json!({
        "command": "rate",
        "domain": {"kind": "unit_square"},
        "coefficient": {"type": "periodic", "preset": {"kind": "layered"}},
        "measure": {"terms": [{"kind": "grid_density", "density": {"type": "constant", "value": 1.0}}]},
        "numerics": {"eps_list": [0.125, 0.0625, 0.03125, 0.015625]}
    });
    let (code, report) = run(dir.path(), "rate", manifest, &[]);
    assert_eq!(code, 0);
    assert!(report["results"]["fitted_rate"].as_f64().unwrap() >= 0.5);
    assert!(dir.path().join("rate/rate.svg").exists());
}
