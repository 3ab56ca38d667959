use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "t,error_1,error_2,norm_error_1,norm_error_2,bound,tau,trace_drift,energy_drift";

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdhf-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = r#"{"d": 4, "seed": 5, "time_grid": {"t_max": 0.9, "samples": 5, "unit": "tau"}}"#;

#[test]
fn missing_config_is_a_usage_error() {
    let out = lab(&["error-bound"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = lab(&["error-bound", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"d": 4, "seed": 1, "extra": true}"#);
    assert_eq!(lab(&["closure-check", "--config", &cfg]).status.code(), Some(2));
    let out = lab(&["error-bound", "--config", &cfg, "--format", "yaml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn error_bound_writes_row_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let csv = dir.path().join("r.csv");
    let out = lab(&["error-bound", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), 6);
}

#[test]
fn identical_config_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let sweep = write_config(
        dir.path(),
        "s.json",
        r#"{"d": 3, "seed": 2, "lambda": "mean-field", "sizes": [3, 4], "family": 2,
            "time_grid": {"t_max": 1.0, "samples": 2, "unit": "absolute"}}"#,
    );
    for (cmd, cfg) in [
        ("error-bound", &cfg),
        ("closure-check", &cfg),
        ("bbgky-check", &cfg),
        ("mean-field-sweep", &sweep),
    ] {
        let runs: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let threads = if k == 0 { "1" } else { "3" };
                let out = lab(&[cmd, "--config", cfg, "--threads", threads]);
                assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
                out.stdout
            })
            .collect();
        assert_eq!(runs[0], runs[1], "{cmd} output differs between runs");
    }
}

#[test]
fn seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let a = lab(&["error-bound", "--config", &cfg]).stdout;
    let b = lab(&["error-bound", "--config", &cfg, "--seed", "6"]).stdout;
    assert_ne!(a, b);
}

#[test]
fn json_mirror_echoes_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", SMALL);
    let out = lab(&["closure-check", "--config", &cfg, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"command\": \"closure-check\""));
    assert!(text.contains("\"seed\": 5"));
    assert!(text.contains("\"wall_time_s\""));
}

#[test]
fn selftest_passes() {
    let out = lab(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("check,passed,detail\n"));
}
