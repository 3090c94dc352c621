use std::path::Path;
use std::process::{Command, Output};

fn wedgegreen(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wedgegreen")).current_dir(dir).args(args).output().unwrap()
}

fn identity_coeffs(dir: &Path) {
    std::fs::write(dir.join("id.kv"), "n=2\nbreakpoints=0\npiece.0=1,0,0,1\n").unwrap();
}

#[test]
fn kernel_peak_value() {
    let dir = tempfile::tempdir().unwrap();
    identity_coeffs(dir.path());
    let out = wedgegreen(dir.path(), &["kernel", "--coeffs", "id.kv", "--x", "0,0", "--y", "0,0", "--t", "1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.0795775");
}

#[test]
fn negative_coordinates_parse() {
    let dir = tempfile::tempdir().unwrap();
    identity_coeffs(dir.path());
    let out = wedgegreen(dir.path(), &["kernel", "--coeffs", "id.kv", "--x", "-1,0.5", "--y", "0,-0.5", "--t", "2", "--s", "-1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn interval_display() {
    let dir = tempfile::tempdir().unwrap();
    let out = wedgegreen(dir.path(), &["intervals", "--kind", "whole_space", "--m", "2", "--p", "2"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "(-1, 1)");
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = wedgegreen(dir.path(), &["kernel", "--coeffs", "nope.kv", "--x", "0,0", "--y", "0,0", "--t", "1"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope.kv"));
    let flag = wedgegreen(dir.path(), &["intervals", "--bogus"]);
    assert_eq!(flag.status.code(), Some(1));
    let preset = wedgegreen(dir.path(), &["verify-bound", "--preset", "May5", "--cloud", "dirichlet"]);
    assert_eq!(preset.status.code(), Some(1));
}

#[test]
fn unstable_sweep_exits_with_two() {
    // 50 points are too few for the half-line sweep to settle.
    let dir = tempfile::tempdir().unwrap();
    let out = wedgegreen(dir.path(), &["appendix", "--lemma", "zhut", "--sweep", "50"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("numerical failure"));
}

#[test]
fn json_outputs_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    identity_coeffs(dir.path());
    std::fs::write(dir.path().join("q.kv"), "sector.theta0=1.5707963267948966\n").unwrap();
    let out = wedgegreen(dir.path(), &["--seed", "3", "lambda", "--domain", "q.kv", "--coeffs", "id.kv", "--method", "closed"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(v["config_sha256"].as_str().unwrap().len(), 64);
    assert!((v["lambda"].as_f64().unwrap() - 2.0).abs() < 1e-12);
}
