use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn critflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critflow"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("critflow runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

const SMALL: &str = r#"{"grid": {"n": 128}, "flow": {"max_steps": 3000}}"#;

#[test]
fn eigs_lists_shifted_eigenvalues_for_each_mode() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = critflow(dir.path(), &["eigs", "--config", &cfg]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&dir.path().join("eigs.csv"));
    assert!(!rows.is_empty());
    let mut modes: Vec<usize> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    modes.sort();
    modes.dedup();
    assert_eq!(modes, vec![0, 1, 2]);
    for r in &rows {
        let lambda: f64 = r[5].parse().unwrap();
        assert!(lambda > 2.0, "λ = {lambda} not above λ₀ = 2");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eigs.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["grid"]["n"], 128);
    assert!(summary["threshold_2"].as_f64().unwrap() > summary["threshold_1"].as_f64().unwrap());
}

#[test]
fn bad_ball_radius_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"model": {"dimension": 4, "ball_radius": 1.2}}"#,
    );
    let out = critflow(dir.path(), &["eigs", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ball_radius must be < 1"));
}

#[test]
fn bad_lambda_flag_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = critflow(dir.path(), &["eigs", "--lambda", "middle(0,1)"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flow_from_bubble_writes_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = critflow(
        dir.path(),
        &[
            "flow", "--from", "bubble", "--lambda", "mid(0,1)", "--config", &cfg,
        ],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let trace = fs::read_to_string(dir.path().join("flow_trace.csv")).unwrap();
    assert!(trace.lines().count() > 2);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("flow.json")).unwrap()).unwrap();
    assert!(summary["result"]["classification"].is_string());
    assert_eq!(summary["result"]["from"], "bubble");
}

#[test]
fn runs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let cfg = write_config(dir.path(), SMALL);
        let out = critflow(
            dir.path(),
            &["flow", "--from", "random", "--seed", "7", "--config", &cfg],
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    for name in ["flow_trace.csv", "flow_terminal.csv"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between identical runs");
    }
}

#[test]
fn verify_runs_a_single_criterion() {
    let dir = TempDir::new().unwrap();
    let out = critflow(dir.path(), &["verify", "--only", "2"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(
        stdout.lines().filter(|l| l.contains("criterion")).count(),
        1
    );
    assert!(stdout.contains("[PASS] criterion  2"));
    let rows = csv_rows(&dir.path().join("verify.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][2], "true");
}

#[test]
fn verify_rejects_unknown_criteria() {
    let dir = TempDir::new().unwrap();
    let out = critflow(dir.path(), &["verify", "--only", "13"]);
    assert_eq!(out.status.code(), Some(2));
}
