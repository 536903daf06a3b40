use std::path::Path;
use std::process::{Command, Output};

fn fairlens(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairlens"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const COLUMNS: &str =
    r#""column_map": {"case_id": "case_id", "activity": "activity", "timestamp": "timestamp"}"#;

#[test]
fn analyze_scenario_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scenario.json"), r#"{"n_cases": 800}"#).unwrap();
    std::fs::write(
        dir.path().join("config.json"),
        format!(r#"{{"input": {{"scenario": "scenario.json"}}, {COLUMNS}}}"#),
    )
    .unwrap();
    let out = fairlens(
        &[
            "analyze",
            "--config",
            "config.json",
            "--out",
            "run",
            "--seed",
            "3",
            "--format",
            "csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("Distributive:"), "{stdout}");
    for name in [
        "report.csv",
        "results.json",
        "outcomes.csv",
        "net.json",
        "log.csv",
    ] {
        assert!(dir.path().join("run").join(name).exists(), "{name}");
    }
    let report = std::fs::read_to_string(dir.path().join("run/report.csv")).unwrap();
    assert_eq!(report.lines().count(), 101);
}

#[test]
fn missing_column_key_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("config.json"),
        r#"{"input": {"log": "log.csv"}, "column_map": {"case_id": "id", "activity": "a"}}"#,
    )
    .unwrap();
    let out = fairlens(&["analyze", "--config", "config.json"], dir.path());
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("column_map.timestamp"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_format_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = fairlens(
        &["analyze", "--config", "c.json", "--format", "pdf"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("pdf"));
}

#[test]
fn simulate_then_discover() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("scenario.json"),
        r#"{"n_cases": 200, "vitals_repeat_prob": 0.3}"#,
    )
    .unwrap();
    let out = fairlens(
        &[
            "simulate",
            "--scenario",
            "scenario.json",
            "--out",
            "log.csv",
            "--seed",
            "11",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let first = std::fs::read(dir.path().join("log.csv")).unwrap();
    fairlens(
        &[
            "simulate",
            "--scenario",
            "scenario.json",
            "--out",
            "again.csv",
            "--seed",
            "11",
        ],
        dir.path(),
    );
    assert_eq!(first, std::fs::read(dir.path().join("again.csv")).unwrap());

    let out = fairlens(
        &[
            "discover", "--log", "log.csv", "--tau", "0.8", "--out", "net.json", "--dot",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let net: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("net.json")).unwrap()).unwrap();
    assert_eq!(net["transitions"].as_array().unwrap().len(), 6);
    assert_eq!(net["source"], "source");
    assert!(std::fs::read_to_string(dir.path().join("net.dot"))
        .unwrap()
        .starts_with("digraph"));
}

#[test]
fn discover_rejects_bad_tau() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("scenario.json"), r#"{"n_cases": 10}"#).unwrap();
    fairlens(
        &[
            "simulate",
            "--scenario",
            "scenario.json",
            "--out",
            "log.csv",
        ],
        dir.path(),
    );
    let out = fairlens(
        &[
            "discover", "--log", "log.csv", "--tau", "1.5", "--out", "net.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("thresholds.tau"));
}
