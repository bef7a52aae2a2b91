//! Loop configuration, usually read from `config.json`.
//!
//! ```json
//! {
//!   "server_url": "http://127.0.0.1:8080",
//!   "model_path": "assistive.sleec",
//!   "channels": {"conditions": "/conditions", "obligations": "/obligations"},
//!   "capabilities": {
//!     "alertNurse": ["compose_alert", {"task": "send_message", "params": ["nurse_channel"]}],
//!     "letUserSleep": "noop"
//!   },
//!   "thresholds": [{"condition": "userSleeping", "source": "eegSleepScore", "op": ">=", "value": 0.5}],
//!   "clock": "wall",
//!   "snapshot_mode": "strict",
//!   "retry": {"attempts": 3, "backoff_ms": 100},
//!   "record_log": "records.jsonl"
//! }
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sleec_core::syntax::{RelOp, ValueKind};
use sleec_core::{Ruleset, SnapshotMode};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Json(#[from] serde_json::Error),
    #[error("capabilities without a task mapping: {}", .0.join(", "))]
    UnmappedCapabilities(Vec<String>),
    #[error("threshold for `{condition}`: {reason}")]
    BadThreshold { condition: String, reason: String },
    #[error("retry.attempts must be at least 1")]
    NoAttempts,
}

impl ConfigError {
    pub fn code(&self) -> &'static str {
        match self {
            ConfigError::Io { .. } => "CONFIG_IO",
            ConfigError::Json(_) => "CONFIG_INVALID",
            ConfigError::UnmappedCapabilities(_) => "UNMAPPED_CAPABILITY",
            ConfigError::BadThreshold { .. } => "BAD_THRESHOLD",
            ConfigError::NoAttempts => "CONFIG_INVALID",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Channels {
    pub probes: String,
    pub conditions: String,
    pub obligations: String,
    pub tasks: String,
    pub acks: String,
    pub records: String,
}

impl Default for Channels {
    fn default() -> Self {
        Channels {
            probes: "/probes".into(),
            conditions: "/conditions".into(),
            obligations: "/obligations".into(),
            tasks: "/tasks".into(),
            acks: "/acks".into(),
            records: "/records".into(),
        }
    }
}

/// One concrete action in a capability's task sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskSpec {
    Name(String),
    Full {
        task: String,
        #[serde(default)]
        params: Vec<String>,
    },
}

impl TaskSpec {
    pub fn task(&self) -> &str {
        match self {
            TaskSpec::Name(t) | TaskSpec::Full { task: t, .. } => t,
        }
    }

    pub fn params(&self) -> &[String] {
        match self {
            TaskSpec::Name(_) => &[],
            TaskSpec::Full { params, .. } => params,
        }
    }
}

/// What a capability expands to. The bare string `"noop"` means no tasks;
/// any other bare string is a single parameterless task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskMapping {
    Single(String),
    Sequence(Vec<TaskSpec>),
}

impl TaskMapping {
    pub fn tasks(&self) -> Vec<TaskSpec> {
        match self {
            TaskMapping::Single(s) if s == sleec_core::syntax::NOOP => Vec::new(),
            TaskMapping::Single(s) => vec![TaskSpec::Name(s.clone())],
            TaskMapping::Sequence(seq) => seq.clone(),
        }
    }
}

/// Turns a raw numeric reading into a boolean monitored condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub condition: String,
    pub source: String,
    pub op: RelOp,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockMode {
    #[default]
    Wall,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            backoff_ms: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub server_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_path: Option<PathBuf>,
    /// Existing session to replace the model of; a new one is created otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    #[serde(default)]
    pub channels: Channels,
    #[serde(default)]
    pub capabilities: BTreeMap<String, TaskMapping>,
    #[serde(default)]
    pub thresholds: Vec<Threshold>,
    #[serde(default)]
    pub clock: ClockMode,
    #[serde(default)]
    pub snapshot_mode: SnapshotMode,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_log: Option<PathBuf>,
}

impl LoopConfig {
    pub fn new(server_url: impl Into<String>) -> Self {
        LoopConfig {
            server_url: server_url.into(),
            model_path: None,
            session_id: None,
            channels: Channels::default(),
            capabilities: BTreeMap::new(),
            thresholds: Vec::new(),
            clock: ClockMode::default(),
            snapshot_mode: SnapshotMode::default(),
            retry: RetryPolicy::default(),
            record_log: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: LoopConfig = serde_json::from_str(text)?;
        if cfg.retry.attempts == 0 {
            return Err(ConfigError::NoAttempts);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        cfg.model_path.as_mut().map(resolve);
        cfg.record_log.as_mut().map(resolve);
        Ok(cfg)
    }

    pub fn tasks_for(&self, capability: &str) -> Option<Vec<TaskSpec>> {
        if capability == sleec_core::syntax::NOOP {
            return Some(Vec::new());
        }
        self.capabilities.get(capability).map(TaskMapping::tasks)
    }

    /// Checks the configuration against the ruleset it will enforce.
    pub fn validate_for(&self, rs: &Ruleset) -> Result<(), ConfigError> {
        let unmapped: Vec<String> = rs
            .vocabulary
            .capabilities
            .iter()
            .filter(|c| self.tasks_for(c).is_none())
            .cloned()
            .collect();
        if !unmapped.is_empty() {
            return Err(ConfigError::UnmappedCapabilities(unmapped));
        }
        for t in &self.thresholds {
            let bad = |reason: &str| ConfigError::BadThreshold {
                condition: t.condition.clone(),
                reason: reason.to_string(),
            };
            match rs.vocabulary.monitored(&t.condition) {
                Some(m) if m.kind == ValueKind::Boolean => {}
                Some(_) => return Err(bad("target is not a boolean condition")),
                None => return Err(bad("target is not a monitored condition")),
            }
            if rs.vocabulary.monitored(&t.source).is_some() {
                return Err(bad("source shadows a monitored condition"));
            }
            if !t.value.is_finite() {
                return Err(bad("value must be finite"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_mapping_forms() {
        let cfg = LoopConfig::from_json(
            r#"{"server_url": "http://x", "capabilities": {
                "a": "noop", "b": "beep", "c": ["x", {"task": "y", "params": ["p"]}]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.retry, RetryPolicy::default());
        assert_eq!(cfg.channels.conditions, "/conditions");
        assert!(cfg.tasks_for("a").unwrap().is_empty());
        assert_eq!(
            cfg.tasks_for("b").unwrap(),
            vec![TaskSpec::Name("beep".into())]
        );
        let c = cfg.tasks_for("c").unwrap();
        assert_eq!(c[1].task(), "y");
        assert_eq!(c[1].params(), ["p".to_string()]);
        assert!(cfg.tasks_for("noop").unwrap().is_empty());
        assert!(cfg.tasks_for("d").is_none());
    }

    #[test]
    fn zero_attempts_rejected() {
        let err = LoopConfig::from_json(r#"{"server_url": "x", "retry": {"attempts": 0}}"#);
        assert!(matches!(err, Err(ConfigError::NoAttempts)));
    }
}
