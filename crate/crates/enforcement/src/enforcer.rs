//! Client side of the model server: uploads the model and steps it.

use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::Value as Json;
use sleec_core::{ConditionSnapshot, ObligationSet, SnapshotMode};
use thiserror::Error;

use crate::clock::Clock;
use crate::config::RetryPolicy;

#[derive(Debug, Error)]
pub enum EnforcerError {
    #[error("model server at {url} unreachable after {attempts} attempt(s): {message}")]
    ServerUnreachable {
        url: String,
        attempts: u32,
        message: String,
    },
    /// The server answered with a 4xx; `body` is its error payload.
    #[error("server rejected {what} ({status}): {code}")]
    StepRejected {
        what: &'static str,
        status: u16,
        code: String,
        body: Json,
    },
    #[error("unexpected server response: {0}")]
    Protocol(String),
}

impl EnforcerError {
    pub fn code(&self) -> &'static str {
        match self {
            EnforcerError::ServerUnreachable { .. } => "SERVER_UNREACHABLE",
            EnforcerError::StepRejected { .. } => "STEP_REJECTED",
            EnforcerError::Protocol(_) => "PROTOCOL_ERROR",
        }
    }
}

/// Result of one step, with the enforcer-side timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obligations: ObligationSet,
    pub step: u64,
    pub server_us: u64,
    pub t_enforcer_in: u64,
    pub t_server_in: u64,
    pub t_server_out: u64,
    pub t_enforcer_out: u64,
}

#[derive(Deserialize)]
struct StepReply {
    #[serde(flatten)]
    obligations: ObligationSet,
    step: u64,
    server_us: u64,
}

#[derive(Deserialize)]
struct SessionReply {
    session_id: String,
}

pub struct Enforcer {
    client: reqwest::Client,
    base: String,
    session: String,
    retry: RetryPolicy,
    clock: Arc<dyn Clock>,
}

impl Enforcer {
    /// Uploads `model` (replacing the model of `session` if given), starts
    /// the session and returns a client bound to it.
    pub async fn connect(
        server_url: &str,
        model: &str,
        session: Option<&str>,
        mode: SnapshotMode,
        retry: RetryPolicy,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, EnforcerError> {
        let mut enforcer = Enforcer {
            client: reqwest::Client::new(),
            base: server_url.trim_end_matches('/').to_string(),
            session: String::new(),
            retry,
            clock,
        };
        enforcer.session = enforcer.upload(model, session, Some(mode)).await?;
        enforcer.start().await?;
        Ok(enforcer)
    }

    pub fn session_id(&self) -> &str {
        &self.session
    }

    /// Replaces the session's model without stopping it.
    pub async fn replace_model(&self, model: &str) -> Result<(), EnforcerError> {
        self.upload(model, Some(&self.session), None)
            .await
            .map(drop)
    }

    async fn upload(
        &self,
        model: &str,
        session: Option<&str>,
        mode: Option<SnapshotMode>,
    ) -> Result<String, EnforcerError> {
        let mut query: Vec<(&str, String)> = Vec::new();
        if let Some(s) = session {
            query.push(("session_id", s.to_string()));
        }
        if let Some(m) = mode {
            let m = serde_json::to_value(m).expect("mode serializes");
            query.push(("mode", m.as_str().unwrap_or_default().to_string()));
        }
        let mut url = reqwest::Url::parse(&format!("{}/upload-model", self.base))
            .map_err(|e| EnforcerError::Protocol(format!("bad server url: {e}")))?;
        if !query.is_empty() {
            url.query_pairs_mut().extend_pairs(&query);
        }
        let body = self
            .send("model upload", || {
                self.client.post(url.clone()).body(model.to_string())
            })
            .await?;
        let reply: SessionReply =
            serde_json::from_slice(&body).map_err(|e| EnforcerError::Protocol(e.to_string()))?;
        Ok(reply.session_id)
    }

    async fn start(&self) -> Result<(), EnforcerError> {
        let url = format!("{}/sessions/{}/start", self.base, self.session);
        self.send("session start", || self.client.post(&url))
            .await
            .map(drop)
    }

    pub async fn stop(&self) -> Result<(), EnforcerError> {
        let url = format!("{}/sessions/{}/stop", self.base, self.session);
        self.send("session stop", || self.client.post(&url))
            .await
            .map(drop)
    }

    /// Posts `snapshot` to the session.
    ///
    /// The server's own processing time is centred inside the measured round
    /// trip to place `t_server_in` and `t_server_out` on the local clock.
    pub async fn step(&self, snapshot: &ConditionSnapshot) -> Result<StepOutcome, EnforcerError> {
        let url = format!("{}/sessions/{}/step", self.base, self.session);
        let payload = serde_json::to_vec(snapshot).expect("snapshots serialize");
        let t_in = self.clock.now();
        let body = self
            .send("step", || {
                self.client
                    .post(&url)
                    .header("content-type", "application/json")
                    .body(payload.clone())
            })
            .await?;
        let t_out = self.clock.now().max(t_in);
        let reply: StepReply =
            serde_json::from_slice(&body).map_err(|e| EnforcerError::Protocol(e.to_string()))?;
        let rtt = t_out - t_in;
        let server_ns = reply.server_us.saturating_mul(1_000).min(rtt);
        let t_server_in = t_in + (rtt - server_ns) / 2;
        Ok(StepOutcome {
            obligations: reply.obligations,
            step: reply.step,
            server_us: reply.server_us,
            t_enforcer_in: t_in,
            t_server_in,
            t_server_out: t_server_in + server_ns,
            t_enforcer_out: t_out,
        })
    }

    /// Sends with retries on transport failures and 5xx answers.
    async fn send(
        &self,
        what: &'static str,
        request: impl Fn() -> reqwest::RequestBuilder,
    ) -> Result<Vec<u8>, EnforcerError> {
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match request().send().await {
                Ok(resp) if resp.status().is_server_error() => {
                    last = format!("HTTP {}", resp.status());
                }
                Ok(resp) => {
                    let status = resp.status();
                    let body = resp
                        .bytes()
                        .await
                        .map_err(|e| EnforcerError::Protocol(e.to_string()))?;
                    if status.is_client_error() {
                        let body: Json = serde_json::from_slice(&body).unwrap_or(Json::Null);
                        let code = body["error"].as_str().unwrap_or("HTTP_ERROR").to_string();
                        return Err(EnforcerError::StepRejected {
                            what,
                            status: status.as_u16(),
                            code,
                            body,
                        });
                    }
                    return Ok(body.to_vec());
                }
                Err(e) => last = e.to_string(),
            }
            if attempt < attempts {
                tokio::time::sleep(Duration::from_millis(self.retry.backoff_ms)).await;
            }
        }
        Err(EnforcerError::ServerUnreachable {
            url: self.base.clone(),
            attempts,
            message: last,
        })
    }
}
