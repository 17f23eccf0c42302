//! Exit codes and outputs of the command-line runner.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ris-anm"))
}

#[test]
fn validate_prints_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"n_trials": 7}"#).unwrap();
    let out = bin().args(["validate", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let printed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed["n_trials"], 7);
    assert_eq!(printed["p_t_sweep_dbm"].as_array().unwrap().len(), 5);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("bad.json", "{not json"),
        ("unknown.json", r#"{"colour": 1}"#),
        ("zero.json", r#"{"n_trials": 0}"#),
        ("setup.json", r#"{"setups": [4]}"#),
    ] {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        let out = bin().args(["validate", "--config"]).arg(&path).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{name}");
    }
}

#[test]
fn io_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["validate", "--config"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));

    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{}").unwrap();
    fs::write(dir.path().join("file"), b"x").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("file/out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_with_overrides_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{}").unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--setup", "2", "--pt-sweep", "0:10:10", "--trials", "2", "--seed", "9", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = fs::read_to_string(out_dir.join("metrics.csv")).unwrap();
    assert!(metrics.lines().skip(1).all(|l| l.starts_with("setup2,")));
    assert!(metrics.contains("setup2,0.0,") && metrics.contains("setup2,10.0,"));
    let frozen: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("config.json")).unwrap()).unwrap();
    assert_eq!(frozen["seed"], 9);
    assert_eq!(frozen["n_trials"], 2);
}

#[test]
fn bad_sweep_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, "{}").unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--pt-sweep", "0:x:20"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
