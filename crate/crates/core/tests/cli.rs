//! End-to-end tests of the binary: exit codes, CSV artifacts, determinism,
//! and the deliberately sabotaged-tolerance run.

use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tresca"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn solve_writes_trajectory_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", r#"{"n": 8, "n_steps": 4}"#);
    let out = dir.path().join("out");
    let status = binary()
        .args(["solve", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("solve.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "node,time,value,seed,config_hash");
    // 5 levels x 9 nodes
    assert_eq!(lines.count(), 45);
    // null data solves to zero
    for line in text.lines().skip(1) {
        let value: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(value, 0.0);
    }
}

#[test]
fn verify_null_data_passes() {
    let dir = tempfile::tempdir().unwrap();
    // small instance to keep the battery quick
    let cfg = write_config(dir.path(), "cfg.json", r#"{"n": 4, "n_steps": 4}"#);
    let out = dir.path().join("out");
    let status = binary()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("checks.csv")).unwrap();
    assert!(text.lines().count() > 200);
    assert!(!text.contains(",false,"));
}

#[test]
fn verify_with_sabotaged_tolerance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        r#"{"n": 4, "n_steps": 4, "b": 1.0, "u_b": 1.0, "newton_tol": 1.0}"#,
    );
    let out = dir.path().join("out");
    let output = binary()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let text = std::fs::read_to_string(out.join("checks.csv")).unwrap();
    assert!(text.contains(",false,"), "expected failing margins in the CSV");
}

#[test]
fn unknown_command_exits_two_with_usage() {
    let output = binary().arg("frobnicate").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "stderr: {stderr}");
}

#[test]
fn missing_config_exits_two() {
    let output = binary()
        .args(["solve", "--config", "/nonexistent/cfg.json"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn invalid_config_value_exits_two_naming_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", r#"{"q": -1.0}"#);
    let output = binary()
        .args(["solve", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("q must be nonnegative"), "stderr: {stderr}");
}

#[test]
fn sweep_eps_csv_has_points_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        r#"{"n": 8, "n_steps": 8, "b": 1.0, "u_b": 1.0,
            "control": {"type": "constant", "value": -1.0},
            "eps_list": [1e-1, 1e-2, 1e-3, 1e-4]}"#,
    );
    let out = dir.path().join("out");
    let status = binary()
        .args(["sweep-eps", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("sweep_eps.csv")).unwrap();
    // header + 4 points + summary
    assert_eq!(text.lines().count(), 6);
    assert!(text.lines().last().unwrap().starts_with("sweep_eps_summary"));
}

#[test]
fn optimize_writes_control_state_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        r#"{"n": 8, "n_steps": 8, "b": 1.0, "u_b": 1.0, "grad_tol": 1e-5}"#,
    );
    let out = dir.path().join("out");
    let status = binary()
        .args(["optimize", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for file in ["optimize_control.csv", "optimize_state.csv", "optimize_report.csv"] {
        assert!(out.join(file).exists(), "{file} missing");
    }
    let report = std::fs::read_to_string(out.join("optimize_report.csv")).unwrap();
    assert!(report.lines().last().unwrap().contains("true"));
}

#[test]
fn seed_override_changes_random_control_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        r#"{"n": 4, "n_steps": 2, "b": 1.0, "u_b": 1.0,
            "control": {"type": "random", "lo": 0.0, "hi": 1.0}}"#,
    );
    let run = |out: &Path, seed: &str| {
        let status = binary()
            .args(["solve", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .args(["--seed", seed])
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        std::fs::read(out.join("solve.csv")).unwrap()
    };
    let a = run(&dir.path().join("a"), "1");
    let b = run(&dir.path().join("b"), "2");
    let a_again = run(&dir.path().join("c"), "1");
    assert_ne!(a, b);
    assert_eq!(a, a_again);
}
