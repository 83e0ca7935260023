use std::path::Path;
use std::process::{Command, Output};

fn bosonstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bosonstar")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const PICARD: &str = r#"{
    "experiment": { "name": "picard_contraction" },
    "grid": { "dim": 1, "n": 128, "length": 32.0 },
    "potential": { "type": "gaussian", "kappa": 0.01, "sigma": 1.0 },
    "initial": { "type": "gaussian", "width": 1.0, "norm": 0.5 },
    "solver": { "dt": 0.02, "t_final": 0.2, "integrator": "picard", "picard_tol": 1e-12 }
}"#;

#[test]
fn missing_config_exits_one() {
    let out = bosonstar(&["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(bosonstar(&["run"]).status.code(), Some(1));
    assert_eq!(bosonstar(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(bosonstar(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_config_lists_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &PICARD.replace("\"n\": 128", "\"n\": 0"));
    let out = bosonstar(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", PICARD);
    assert_eq!(bosonstar(&["validate", &cfg]).status.code(), Some(0));
    let out_dir = dir.path().join("out");
    let out = bosonstar(&["run", &cfg, "--out", out_dir.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(out_dir.join("report.json").exists());
    let rep = bosonstar(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&rep.stdout).contains("picard_contraction [PASS]"));
}

#[test]
fn failed_check_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    // too strong a coupling for the smallness condition
    let cfg = write(dir.path(), "c.json", &PICARD.replace("\"kappa\": 0.01", "\"kappa\": 1.0"));
    let out = bosonstar(&["run", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
}
