//! The command-line driver: exit codes, overrides and byte-stable output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_girsanov-verdict"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const DRIFTED_BM: &str = r#"{"field": {"b": "0", "c": "1", "beta": "1", "x0": 0}}"#;

#[test]
fn decisive_classification_exits_zero() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bm.json", DRIFTED_BM);
    let out = cli(&["classify1d", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["task"], "classify1d");
    assert_eq!(report["status"], "pass");
    assert_eq!(report["condition_labels"].as_array().unwrap().len(), 6);
}

#[test]
fn unproven_growth_exits_two() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "cubic.json",
        r#"{"field": {"b": "x^3", "c": "1", "beta": "x", "x0": 0}, "gamma": "1"}"#,
    );
    assert_eq!(cli(&["growth-check", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn schema_errors_name_the_offending_key() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"field": {"b": "0", "c": "1", "beta": "1", "x0": 0}, "mc": {"n_pathz": 3}}"#);
    let out = cli(&["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error:") && err.contains("/mc/n_pathz"), "{err}");

    let missing = dir.path().join("absent.json");
    let out = cli(&["simulate", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unparsable_expression_is_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "expr.json", r#"{"field": {"b": "0 +", "c": "1", "beta": "1", "x0": 0}}"#);
    let out = cli(&["classify1d", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn repeated_simulations_are_byte_identical_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bm.json", DRIFTED_BM);
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let csv = dir.path().join("tables");
    let common = ["--config", &cfg, "--seed", "11", "--paths", "500", "--dt", "0.01"];
    let run = |out: &Path, extra: &[&str]| {
        let mut args = vec!["simulate"];
        args.extend_from_slice(&common);
        args.extend_from_slice(&["--out", out.to_str().unwrap()]);
        args.extend_from_slice(extra);
        let o = cli(&args);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&first, &["--csv", csv.to_str().unwrap()]);
    run(&second, &[]);
    let a = fs::read(&first).unwrap();
    assert_eq!(a, fs::read(&second).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(report["seed"], 11);
    assert_eq!(report["config"]["mc"]["n_paths"], 500);
    assert_eq!(report["config"]["mc"]["dt"], 0.01);
    assert!(report.get("timing_ms").is_none());
    assert!(csv.join("crossings.csv").exists() && csv.join("h_quantiles.csv").exists());
}

#[test]
fn unknown_task_is_rejected_by_the_parser() {
    let out = cli(&["integrate-everything", "--config", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrate-everything"));
    assert_eq!(cli(&["--help"]).status.code(), Some(0));
}
