use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use sleec_core::{compile, parse_ruleset, ConditionSnapshot, RuleMachine, SnapshotMode};

use crate::log::RequestLogEntry;
use crate::session::{ServerState, SessionStatus};

pub fn router(state: ServerState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/upload-model", post(upload))
        .route("/sessions/{id}", get(describe))
        .route("/sessions/{id}/latencies", get(latencies))
        .route("/sessions/{id}/start", post(start))
        .route("/sessions/{id}/stop", post(stop))
        .route("/sessions/{id}/step", post(step))
        .with_state(state)
}

struct Reply {
    status: StatusCode,
    body: Value,
    session: Option<String>,
    step: Option<u64>,
    server_us: Option<u64>,
}

impl Reply {
    fn new(status: StatusCode, body: Value) -> Self {
        Reply {
            status,
            body,
            session: None,
            step: None,
            server_us: None,
        }
    }

    fn session(mut self, id: &str) -> Self {
        self.session = Some(id.to_string());
        self
    }

    fn send(self, state: &ServerState, method: &str, path: String) -> Response {
        if let Some(log) = &state.log {
            log.record(&RequestLogEntry {
                method: method.to_string(),
                path,
                session: self.session,
                step: self.step,
                server_us: self.server_us,
                status: self.status.as_u16(),
            });
        }
        (self.status, Json(self.body)).into_response()
    }
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Reply {
    Reply::new(status, json!({"error": code, "message": message.into()}))
}

fn unknown_session(id: &str) -> Reply {
    error(
        StatusCode::NOT_FOUND,
        "UNKNOWN_SESSION",
        format!("no session `{id}`"),
    )
    .session(id)
}

async fn health(State(state): State<ServerState>) -> Response {
    Reply::new(StatusCode::OK, json!({"status": "ok"})).send(&state, "GET", "/health".into())
}

#[derive(Debug, Deserialize)]
struct UploadParams {
    session_id: Option<String>,
    mode: Option<SnapshotMode>,
}

fn build(source: &str) -> Result<RuleMachine, Reply> {
    let rs = parse_ruleset(source).map_err(|e| {
        Reply::new(
            StatusCode::BAD_REQUEST,
            json!({
                "error": "PARSE_ERROR",
                "message": e.first().to_string(),
                "diagnostics": e.diagnostics,
            }),
        )
    })?;
    compile(&rs).map_err(|e| {
        Reply::new(
            StatusCode::BAD_REQUEST,
            json!({
                "error": "COMPILE_ERROR",
                "message": e.to_string(),
                "diagnostics": e.diagnostics,
            }),
        )
    })
}

async fn upload(
    State(state): State<ServerState>,
    Query(params): Query<UploadParams>,
    body: String,
) -> Response {
    let reply = upload_reply(&state, params, &body).await;
    reply.send(&state, "POST", "/upload-model".into())
}

async fn upload_reply(state: &ServerState, params: UploadParams, body: &str) -> Reply {
    let machine = match build(body) {
        Ok(m) => m,
        Err(reply) => return reply,
    };
    match params.session_id {
        None => {
            let mode = params.mode.unwrap_or_default();
            let id = state.insert(machine, mode);
            Reply::new(
                StatusCode::CREATED,
                json!({"session_id": id, "status": SessionStatus::Loaded}),
            )
            .session(&id)
        }
        Some(id) => {
            let Some(session) = state.get(&id) else {
                return unknown_session(&id);
            };
            let mut inner = session.inner.lock().await;
            inner.machine = std::sync::Arc::new(machine);
            if let Some(mode) = params.mode {
                inner.mode = mode;
            }
            inner.steps = 0;
            inner.latencies_us.clear();
            Reply::new(
                StatusCode::OK,
                json!({"session_id": id, "status": inner.status, "replaced": true}),
            )
            .session(&id)
        }
    }
}

async fn transition(state: &ServerState, id: &str, to: SessionStatus) -> Reply {
    let Some(session) = state.get(id) else {
        return unknown_session(id);
    };
    let mut inner = session.inner.lock().await;
    inner.status = match (inner.status, to) {
        (_, SessionStatus::Running) => SessionStatus::Running,
        (SessionStatus::Loaded, SessionStatus::Stopped) => SessionStatus::Loaded,
        _ => SessionStatus::Stopped,
    };
    Reply::new(
        StatusCode::OK,
        json!({"session_id": id, "status": inner.status}),
    )
    .session(id)
}

async fn start(State(state): State<ServerState>, Path(id): Path<String>) -> Response {
    let reply = transition(&state, &id, SessionStatus::Running).await;
    reply.send(&state, "POST", format!("/sessions/{id}/start"))
}

async fn stop(State(state): State<ServerState>, Path(id): Path<String>) -> Response {
    let reply = transition(&state, &id, SessionStatus::Stopped).await;
    reply.send(&state, "POST", format!("/sessions/{id}/stop"))
}

async fn describe(State(state): State<ServerState>, Path(id): Path<String>) -> Response {
    let reply = match state.get(&id) {
        None => unknown_session(&id),
        Some(session) => {
            let inner = session.inner.lock().await;
            let rules: Vec<&str> = inner.machine.rule_ids().collect();
            Reply::new(
                StatusCode::OK,
                json!({
                    "session_id": id,
                    "status": inner.status,
                    "steps": inner.steps,
                    "mode": inner.mode,
                    "rules": rules,
                }),
            )
            .session(&id)
        }
    };
    reply.send(&state, "GET", format!("/sessions/{id}"))
}

async fn latencies(State(state): State<ServerState>, Path(id): Path<String>) -> Response {
    let reply = match state.get(&id) {
        None => unknown_session(&id),
        Some(session) => {
            let inner = session.inner.lock().await;
            Reply::new(StatusCode::OK, json!({"server_us": inner.latencies_us})).session(&id)
        }
    };
    reply.send(&state, "GET", format!("/sessions/{id}/latencies"))
}

async fn step(State(state): State<ServerState>, Path(id): Path<String>, body: Bytes) -> Response {
    let reply = step_reply(&state, &id, &body).await;
    reply.send(&state, "POST", format!("/sessions/{id}/step"))
}

async fn step_reply(state: &ServerState, id: &str, body: &[u8]) -> Reply {
    let Some(session) = state.get(id) else {
        return unknown_session(id);
    };
    let mut inner = session.inner.lock().await;
    if inner.status != SessionStatus::Running {
        return Reply::new(
            StatusCode::CONFLICT,
            json!({
                "error": "NOT_RUNNING",
                "message": format!("session `{id}` is not running"),
                "status": inner.status,
            }),
        )
        .session(id);
    }
    let started = Instant::now();
    inner.steps += 1;
    let step_index = inner.steps;
    let result = serde_json::from_slice::<ConditionSnapshot>(body)
        .map_err(|e| {
            error(
                StatusCode::BAD_REQUEST,
                "MALFORMED_SNAPSHOT",
                format!("snapshot is not valid JSON of the form {{\"values\": {{...}}}}: {e}"),
            )
        })
        .and_then(|snap| {
            inner.machine.step_with(&snap, inner.mode).map_err(|e| {
                let status = if e.is_snapshot_error() && e.code() != "MISSING_BINDING" {
                    StatusCode::BAD_REQUEST
                } else {
                    StatusCode::UNPROCESSABLE_ENTITY
                };
                let mut body = serde_json::to_value(&e).unwrap_or_else(|_| json!({}));
                body["error"] = json!(e.code());
                body["message"] = json!(e.to_string());
                Reply::new(status, body)
            })
        });
    let server_us = started.elapsed().as_micros() as u64;
    inner.latencies_us.push(server_us);
    let mut reply = match result {
        Ok(set) => {
            let mut body = serde_json::to_value(&set).expect("obligation sets serialize");
            body["server_us"] = json!(server_us);
            body["step"] = json!(step_index);
            Reply::new(StatusCode::OK, body)
        }
        Err(mut reply) => {
            reply.body["step"] = json!(step_index);
            reply
        }
    };
    reply.session = Some(id.to_string());
    reply.step = Some(step_index);
    reply.server_us = Some(server_us);
    reply
}
