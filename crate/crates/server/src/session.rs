use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::Serialize;
use sleec_core::{RuleMachine, SnapshotMode};
use tokio::sync::Mutex;

use crate::log::RequestLog;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Loaded,
    Running,
    Stopped,
}

#[derive(Debug)]
pub(crate) struct SessionInner {
    pub machine: Arc<RuleMachine>,
    pub mode: SnapshotMode,
    pub status: SessionStatus,
    pub steps: u64,
    pub latencies_us: Vec<u64>,
}

/// A hosted model. The mutex serializes steps in arrival order.
#[derive(Debug)]
pub(crate) struct Session {
    pub inner: Mutex<SessionInner>,
}

/// Shared state of all sessions. Cheap to clone.
#[derive(Debug, Clone, Default)]
pub struct ServerState {
    sessions: Arc<RwLock<HashMap<String, Arc<Session>>>>,
    next_id: Arc<AtomicU64>,
    pub(crate) log: Option<RequestLog>,
}

impl ServerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_log(mut self, log: RequestLog) -> Self {
        self.log = Some(log);
        self
    }

    pub(crate) fn insert(&self, machine: RuleMachine, mode: SnapshotMode) -> String {
        let id = format!(
            "session-{}",
            self.next_id.fetch_add(1, Ordering::Relaxed) + 1
        );
        let session = Arc::new(Session {
            inner: Mutex::new(SessionInner {
                machine: Arc::new(machine),
                mode,
                status: SessionStatus::Loaded,
                steps: 0,
                latencies_us: Vec::new(),
            }),
        });
        self.sessions
            .write()
            .expect("session table lock")
            .insert(id.clone(), session);
        id
    }

    pub(crate) fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions
            .read()
            .expect("session table lock")
            .get(id)
            .cloned()
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .sessions
            .read()
            .expect("session table lock")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }
}
