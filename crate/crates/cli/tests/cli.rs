use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str], config: &str) -> Output {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_solitary"));
    cmd.args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out);
    cmd.output().unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap()
}

#[test]
fn check_asmp_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["check"], r#"{"model": "asmp"}"#);
    assert_eq!(o.status.code(), Some(0));
    let report = stdout_json(&o);
    assert!((report["gamma"].as_f64().unwrap() - 4.5).abs() < 1e-6);
    assert_eq!(report["all_pass"], Value::Bool(true));
}

#[test]
fn check_reports_abcd_condition() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["check"],
        r#"{"model":"abcd","a":0,"b":0.1667,"c":0,"d":0.1667}"#,
    );
    assert_eq!(o.status.code(), Some(1));
    let report = stdout_json(&o);
    let notes = report["notes"].to_string();
    assert!(notes.contains("AbcdConditionViolated{4}"), "{notes}");
}

#[test]
fn malformed_json_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["check"], r#"{"model": "#);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "ParseError");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["check"], r#"{"model": "ddk", "solver": {}}"#);
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["check"], r#"{"model": "kdv"}"#);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "UnknownModel");
}

#[test]
fn solve_writes_profiles_and_result() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["solve"],
        r#"{"model": "ddk", "solve": {"eps": 0.05}}"#,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("out");
    let result: Value =
        serde_json::from_str(&fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    for key in [
        "eps",
        "omega",
        "iterations",
        "phi_norm",
        "deviation",
        "r1",
        "r2",
    ] {
        assert!(result.get(key).is_some(), "{key}");
    }
    assert!(result["phi_norm"].as_f64().unwrap() <= 1e-11);
    assert!(result["r1"].as_f64().unwrap() <= 1e-8);
    let profile = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert_eq!(profile.lines().next().unwrap(), "x,v,eta");
    assert_eq!(profile.lines().count(), 1025);
    let coeffs = fs::read_to_string(out.join("coeffs.csv")).unwrap();
    assert_eq!(coeffs.lines().next().unwrap(), "k,xi,coeff");
}

#[test]
fn solve_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = r#"{"model": "hp", "grid": {"N": 256}, "solve": {"eps": 0.1}}"#;
    run(a.path(), &["solve"], cfg);
    run(b.path(), &["solve"], cfg);
    for f in [
        "result.json",
        "profile.csv",
        "profile_rescaled.csv",
        "coeffs.csv",
    ] {
        let x = fs::read(a.path().join("out").join(f)).unwrap();
        let y = fs::read(b.path().join("out").join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn solve_rejects_eps_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["solve"],
        r#"{"model": "ddk", "solve": {"eps": 0}}"#,
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "InvalidConfig");
}

#[test]
fn solve_failure_is_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    // M rises again past xi = 1 and meets the wave speed on the grid.
    let cfg = r#"{"model": "custom", "M": "1 - k^2/6 + k^4", "F": "0.5", "G": "1", "H": "1",
                  "solve": {"eps": 0.3}}"#;
    let o = run(dir.path(), &["solve"], cfg);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "SpectrumCollision");
    assert!(err["xi"].as_f64().is_some());
}

#[test]
fn sweep_ddk_passes_with_rate() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["sweep"],
        r#"{"model": "ddk", "grid": {"N": 512}, "solve": {"eps_list": [0.2, 0.1, 0.05, 0.025]}}"#,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("out");
    let rate: Value =
        serde_json::from_str(&fs::read_to_string(out.join("rate.json")).unwrap()).unwrap();
    assert!((rate["predicted_exponent"].as_f64().unwrap() - 1.5).abs() < 1e-6);
    assert!(rate["fitted_slope"].as_f64().unwrap() >= 1.0);
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(
        sweep.lines().next().unwrap(),
        "eps,omega,iterations,phi_norm,deviation,r1,r2"
    );
    assert_eq!(sweep.lines().count(), 5);
    assert!(out.join("profile_eps0.025.csv").exists());
}

#[test]
fn sweep_hp_cold_start() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["sweep"],
        r#"{"model": "hp", "grid": {"N": 512},
            "solve": {"eps_list": [0.2, 0.1, 0.05, 0.025], "cold_start": true}}"#,
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn sweep_needs_three_eps() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["sweep"],
        r#"{"model": "ddk", "solve": {"eps_list": [0.1]}}"#,
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "InsufficientData");
}

#[test]
fn symbol_eval() {
    let o = Command::new(env!("CARGO_BIN_EXE_solitary"))
        .args(["symbol-eval", "sqrt(tanh(k)/k)", "0"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!((stdout_json(&o)["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let o = Command::new(env!("CARGO_BIN_EXE_solitary"))
        .args(["symbol-eval", "tanh(q)", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "UnknownIdentifier");
}
