use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn sleec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sleec"))
        .args(args)
        .output()
        .unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn parse_summarises_the_scenario() {
    let o = sleec(&["parse", &fixture("assistive.sleec")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("9 rules"), "{}", stdout(&o));
}

#[test]
fn parse_error_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.sleec");
    std::fs::write(&bad, "RULE X\nIF THEN\n").unwrap();
    let o = sleec(&["parse", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.sleec"));
}

#[test]
fn missing_file_and_bad_flags_are_usage_errors() {
    assert_eq!(
        sleec(&["parse", "/nonexistent.sleec"]).status.code(),
        Some(2)
    );
    assert_eq!(
        sleec(&["bench", "--transport", "carrier-pigeon"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn step_all_false_is_respectful() {
    let o = sleec(&["step", "--snapshot", &fixture("all_false.json")]);
    assert!(o.status.success());
    assert_eq!(
        stdout(&o).trim(),
        r#"{"directives":[],"status":"respectful"}"#
    );
}

#[test]
fn analyze_reports_dead_clauses() {
    let o = sleec(&["analyze", &fixture("dead.sleec"), "--json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let dead = report["diagnostics"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|d| d["code"] == "DEAD_CLAUSE")
        .count();
    assert_eq!(dead, 2);
    assert_eq!(
        sleec(&["analyze", &fixture("conflict.sleec")])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn generated_synthetic_model_is_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("syn.sleec");
    let o = sleec(&[
        "gen-synthetic",
        "--rules",
        "3",
        "--clauses",
        "4",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(sleec(&["fmt", "--check", out.to_str().unwrap()])
        .status
        .success());
    let cases = dir.path().join("cases.json");
    let o = sleec(&[
        "gen-tests",
        "--model",
        out.to_str().unwrap(),
        "--cases",
        "5",
        "--out",
        cases.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(cases).unwrap()).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 5);
}

#[test]
fn bench_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = sleec(&[
        "bench",
        "--scenario",
        "--cases",
        "20",
        "--transport",
        "http",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("20/20"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["suites"][0]["matches"], 20);
    let csv = std::fs::read_to_string(out.join("latency.csv")).unwrap();
    assert_eq!(csv.lines().count(), 21, "header plus one row per case");
}

#[test]
fn loop_turns_probe_lines_into_records() {
    let server = Command::new(env!("CARGO_BIN_EXE_sleec"))
        .args(["serve", "--addr", "127.0.0.1:38517"])
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut server = Guard(server);
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("assistive.config.json")).unwrap())
            .unwrap();
    cfg["server_url"] = "http://127.0.0.1:38517".into();
    cfg["model_path"] = fixture("assistive.sleec").into();
    cfg["record_log"] = serde_json::Value::Null;
    cfg["retry"] = serde_json::json!({"attempts": 30, "backoff_ms": 100});
    let cfg_path = dir.path().join("loop.json");
    std::fs::write(&cfg_path, cfg.to_string()).unwrap();

    let snapshot: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("all_false.json")).unwrap()).unwrap();
    let samples: Vec<serde_json::Value> = snapshot["values"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| serde_json::json!({"source": k, "value": v, "timestamp": 0}))
        .collect();
    let batch = serde_json::json!({"case": "quiet", "samples": samples});

    // The server may still be binding; the loop retries its upload.
    let mut child = Command::new(env!("CARGO_BIN_EXE_sleec"))
        .args(["loop", "--config", cfg_path.to_str().unwrap()])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    writeln!(child.stdin.as_mut().unwrap(), "{batch}").unwrap();
    drop(child.stdin.take());
    let o = child.wait_with_output().unwrap();
    server.0.kill().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line: serde_json::Value = serde_json::from_str(stdout(&o).lines().next().unwrap()).unwrap();
    assert_eq!(line["type"], "record");
    assert_eq!(line["case"], "quiet");
    assert_eq!(line["obligations"]["status"], "respectful");
}

/// Kills the child on drop so a failing assertion does not leak a server.
struct Guard(std::process::Child);

impl Drop for Guard {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}
