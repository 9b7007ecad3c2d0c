use std::path::Path;
use std::process::{Command, Output};

fn qrforms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrforms"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn passing_run_exits_zero_and_prints_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"suites": ["algebra"]}"#);
    let out = qrforms(&["run", "--config", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["summary"]["fail"], 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("passed"));
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"suites": ["forms"], "tolerances": {"forms.quadrature": 0.0}}"#,
    );
    let out = qrforms(&["run", "--config", &cfg, "--resolution", "72"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"suites": ["algebra"]}"#);
    assert_eq!(
        qrforms(&["run", "--config", &cfg, "--suite", "unknown"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qrforms(&["run", "--config", &cfg, "--format", "xml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qrforms(&["run", "--config", &cfg, "--resolution", "32"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qrforms(&["run", "--config", "/nonexistent/config.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qrforms(&["run"]).status.code(), Some(2));
    let bad = write_config(dir.path(), r#"{"suites": ["algebra"], "sede": 3}"#);
    let out = qrforms(&["run", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
}

#[test]
fn out_directory_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"suites": ["all"]}"#);
    let out_dir = dir.path().join("reports");
    let out = qrforms(&[
        "run",
        "--config",
        &cfg,
        "--suite",
        "linear",
        "--seed",
        "9",
        "--format",
        "csv",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.starts_with("linear.")));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"suites": ["linear", "degree"], "resolutions": [64]}"#,
    );
    let a = qrforms(&["run", "--config", &cfg]);
    let b = qrforms(&["run", "--config", &cfg]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
