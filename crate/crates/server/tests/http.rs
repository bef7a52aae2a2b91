use std::io::Write;
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};
use sleec_core::{compile, parse_ruleset, ConditionSnapshot};
use sleec_server::{spawn, RequestLog, RunningServer, ServerState};

fn scenario_source() -> String {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/assistive.sleec"
    );
    std::fs::read_to_string(path).unwrap()
}

async fn server() -> RunningServer {
    spawn("127.0.0.1:0".parse().unwrap(), ServerState::new())
        .await
        .unwrap()
}

struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    fn new(server: &RunningServer) -> Self {
        Client {
            http: reqwest::Client::new(),
            base: server.url(),
        }
    }

    async fn post(&self, path: &str, body: impl Into<reqwest::Body>) -> (u16, Value) {
        let resp = self
            .http
            .post(format!("{}{path}", self.base))
            .body(body)
            .send()
            .await
            .unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap())
    }

    async fn get(&self, path: &str) -> (u16, Value) {
        let resp = self
            .http
            .get(format!("{}{path}", self.base))
            .send()
            .await
            .unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap())
    }

    async fn upload(&self, source: String) -> String {
        let (status, body) = self.post("/upload-model", source).await;
        assert_eq!(status, 201, "{body}");
        body["session_id"].as_str().unwrap().to_string()
    }
}

fn s2_snapshot(extra: &[&str]) -> ConditionSnapshot {
    let rs = parse_ruleset(&scenario_source()).unwrap();
    let mut snap = ConditionSnapshot::all_false(&rs.vocabulary);
    snap.set("timeOfDay", "TRAININGTIME");
    for name in extra {
        snap.set(*name, true);
    }
    snap
}

fn strip_timing(mut v: Value) -> Value {
    let obj = v.as_object_mut().unwrap();
    obj.remove("server_us");
    obj.remove("step");
    v
}

#[tokio::test]
async fn lifecycle_and_steps() {
    let srv = server().await;
    let c = Client::new(&srv);
    let id = c.upload(scenario_source()).await;

    let snap = serde_json::to_string(&s2_snapshot(&["fewerExerciseRepetitions"])).unwrap();
    let (status, body) = c.post(&format!("/sessions/{id}/step"), snap.clone()).await;
    assert_eq!(status, 409, "{body}");
    assert_eq!(body["error"], "NOT_RUNNING");

    let (status, body) = c.post(&format!("/sessions/{id}/start"), "").await;
    assert_eq!((status, body["status"].clone()), (200, json!("running")));

    let (status, body) = c.post(&format!("/sessions/{id}/step"), snap).await;
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["directives"][0]["capability"], "encourage");
    assert_eq!(body["status"], "critical");
    assert!(body["server_us"].is_u64());
    assert_eq!(body["step"], 1);

    let (status, body) = c.post(&format!("/sessions/{id}/step"), "{not json").await;
    assert_eq!(status, 400);
    assert_eq!(body["error"], "MALFORMED_SNAPSHOT");

    let (status, body) = c
        .post(
            &format!("/sessions/{id}/step"),
            r#"{"values":{"userReady":true}}"#,
        )
        .await;
    assert_eq!(status, 422);
    assert_eq!(body["error"], "MISSING_BINDING");

    let (status, body) = c
        .post(
            &format!("/sessions/{id}/step"),
            r#"{"values":{"userReady":3}}"#,
        )
        .await;
    assert_eq!(status, 400);
    assert_eq!(body["error"], "TYPE_MISMATCH");

    for _ in 0..2 {
        let (status, body) = c.post(&format!("/sessions/{id}/stop"), "").await;
        assert_eq!((status, body["status"].clone()), (200, json!("stopped")));
    }
    let (status, _) = c.post(&format!("/sessions/{id}/step"), "{}").await;
    assert_eq!(status, 409);

    let (status, body) = c.get(&format!("/sessions/{id}")).await;
    assert_eq!(status, 200);
    assert_eq!(body["steps"], 4);

    let (status, _) = c.post("/sessions/session-999/start", "").await;
    assert_eq!(status, 404);
    srv.shutdown().await.unwrap();
}

#[tokio::test]
async fn invalid_model_reports_positions() {
    let srv = server().await;
    let c = Client::new(&srv);
    let (status, body) = c.post("/upload-model", "RULE S2\nIF THEN").await;
    assert_eq!(status, 400);
    assert_eq!(body["error"], "PARSE_ERROR");
    assert_eq!(body["diagnostics"][0]["line"], 2);
    assert_eq!(body["diagnostics"][0]["column"], 4);
    srv.shutdown().await.unwrap();
}

#[tokio::test]
async fn http_matches_in_process_step() {
    let srv = server().await;
    let c = Client::new(&srv);
    let id = c.upload(scenario_source()).await;
    c.post(&format!("/sessions/{id}/start"), "").await;
    let machine = compile(&parse_ruleset(&scenario_source()).unwrap()).unwrap();
    for extra in [
        &[][..],
        &["fewerExerciseRepetitions"][..],
        &[
            "fewerExerciseRepetitions",
            "userEncouraged",
            "userPhysicalIssues",
        ][..],
        &["userExercising", "userComplainsTired"][..],
    ] {
        let snap = s2_snapshot(extra);
        let (status, body) = c
            .post(
                &format!("/sessions/{id}/step"),
                serde_json::to_string(&snap).unwrap(),
            )
            .await;
        assert_eq!(status, 200);
        let local = serde_json::to_value(machine.step(&snap).unwrap()).unwrap();
        assert_eq!(
            serde_json::to_string(&strip_timing(body)).unwrap(),
            serde_json::to_string(&local).unwrap()
        );
    }
    srv.shutdown().await.unwrap();
}

#[tokio::test]
async fn reupload_keeps_id_and_resets_counter() {
    let srv = server().await;
    let c = Client::new(&srv);
    let source = scenario_source();
    let id = c.upload(source.clone()).await;
    c.post(&format!("/sessions/{id}/start"), "").await;
    let snap = serde_json::to_string(&s2_snapshot(&["fewerExerciseRepetitions"])).unwrap();
    c.post(&format!("/sessions/{id}/step"), snap.clone()).await;

    let swapped = source.replace(
        "UNLESS fewerExerciseRepetitions IN WHICH CASE encourage",
        "UNLESS fewerExerciseRepetitions IN WHICH CASE encourage\nUNLESS NOT userEncouraged IN WHICH CASE askUserIntent",
    );
    let (status, body) = c
        .post(&format!("/upload-model?session_id={id}"), swapped)
        .await;
    assert_eq!(status, 200, "{body}");
    assert_eq!(body["session_id"], id.as_str());
    assert_eq!(body["status"], "running");

    let (status, body) = c.post(&format!("/sessions/{id}/step"), snap).await;
    assert_eq!(status, 200);
    assert_eq!(body["step"], 1);
    assert_eq!(body["directives"][0]["capability"], "askUserIntent");

    let (status, _) = c.post("/upload-model?session_id=session-77", source).await;
    assert_eq!(status, 404);
    srv.shutdown().await.unwrap();
}

#[tokio::test]
async fn concurrent_steps_are_serialized() {
    let srv = server().await;
    let c = Arc::new(Client::new(&srv));
    let id = c.upload(scenario_source()).await;
    c.post(&format!("/sessions/{id}/start"), "").await;
    let snap = serde_json::to_string(&s2_snapshot(&[])).unwrap();
    let mut tasks = Vec::new();
    for _ in 0..24 {
        let c = c.clone();
        let path = format!("/sessions/{id}/step");
        let snap = snap.clone();
        tasks.push(tokio::spawn(async move { c.post(&path, snap).await }));
    }
    let mut steps = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, 200);
        steps.push(body["step"].as_u64().unwrap());
    }
    steps.sort();
    assert_eq!(steps, (1..=24).collect::<Vec<u64>>());
    srv.shutdown().await.unwrap();
}

#[derive(Clone, Default)]
struct Buffer(Arc<Mutex<Vec<u8>>>);

impl Write for Buffer {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }
    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

#[tokio::test]
async fn request_log_has_one_json_line_per_request() {
    let buf = Buffer::default();
    let state = ServerState::new().with_log(RequestLog::new(buf.clone()));
    let srv = spawn("127.0.0.1:0".parse().unwrap(), state).await.unwrap();
    let c = Client::new(&srv);
    let id = c.upload(scenario_source()).await;
    c.post(&format!("/sessions/{id}/start"), "").await;
    c.post(
        &format!("/sessions/{id}/step"),
        serde_json::to_string(&s2_snapshot(&[])).unwrap(),
    )
    .await;
    srv.shutdown().await.unwrap();
    let text = String::from_utf8(buf.0.lock().unwrap().clone()).unwrap();
    let lines: Vec<Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 3);
    let step = &lines[2];
    assert_eq!(step["session"], id.as_str());
    assert_eq!(step["step"], 1);
    assert_eq!(step["status"], 200);
    assert!(step["server_us"].is_u64());
}
