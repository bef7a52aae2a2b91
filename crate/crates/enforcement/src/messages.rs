//! Messages exchanged over the bus. All timestamps are clock nanoseconds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sleec_core::{ConditionSnapshot, ObligationSet, Provenance, Value};

/// One raw reading from the managed system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub source: String,
    pub value: Value,
    #[serde(default)]
    pub timestamp: u64,
}

impl ProbeSample {
    pub fn new(source: impl Into<String>, value: impl Into<Value>, timestamp: u64) -> Self {
        ProbeSample {
            source: source.into(),
            value: value.into(),
            timestamp,
        }
    }
}

/// Samples applied together, e.g. everything observed for one test case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeBatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub samples: Vec<ProbeSample>,
}

/// Condition changes since the previous publication, plus the full snapshot
/// to step on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsUpdate {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub changed: BTreeMap<String, Value>,
    pub snapshot: ConditionSnapshot,
    pub t_probe: u64,
    pub t_conditions_published: u64,
}

/// Non-empty step result handed to the executor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationsUpdate {
    pub step: u64,
    pub obligations: ObligationSet,
    /// Record to complete once tasks are dispatched.
    pub record: EnforcementRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Dispatched as soon as the directive arrives.
    Immediate,
    /// Dispatched when an AFTER delay expires.
    Delayed,
    /// Dispatched because a WITHIN deadline passed without acknowledgment.
    Fallback,
}

/// A concrete action for the managed system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub task: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<String>,
    /// Capability the task realises (the fallback capability for fallbacks).
    pub capability: String,
    /// Capability of the directive that caused the task.
    pub directive: String,
    pub provenance: Vec<Provenance>,
    pub step: u64,
    pub kind: TaskKind,
    pub issued_at: u64,
}

/// Sent by the managed system when a capability has been carried out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FulfillmentAck {
    pub capability: String,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
    #[serde(default)]
    pub timestamp: u64,
}

/// Why a pass through the loop did not complete.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordError {
    /// `SERVER_UNREACHABLE`, `STEP_REJECTED`, `UNMAPPED_CAPABILITY`, ...
    pub kind: String,
    /// The server's error code for rejected steps, e.g. `INVARIANT_VIOLATION`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub code: Option<String>,
    pub message: String,
}

/// Timeline of one pass through the loop.
///
/// Timestamps are non-decreasing in field order. `t_server_in` and
/// `t_server_out` are placed symmetrically inside the enforcer's round trip
/// using the server-reported processing time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EnforcementRecord {
    pub case: Option<String>,
    pub step: Option<u64>,
    pub t_probe: u64,
    pub t_conditions_published: u64,
    pub t_enforcer_in: u64,
    pub t_server_in: u64,
    pub t_server_out: u64,
    pub t_enforcer_out: u64,
    pub t_tasks_dispatched: u64,
    pub server_us: u64,
    pub obligations: Option<ObligationSet>,
    pub tasks: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<RecordError>,
    /// Whether the obligations equal the expected ones, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched: Option<bool>,
}

impl EnforcementRecord {
    pub fn timestamps(&self) -> [u64; 7] {
        [
            self.t_probe,
            self.t_conditions_published,
            self.t_enforcer_in,
            self.t_server_in,
            self.t_server_out,
            self.t_enforcer_out,
            self.t_tasks_dispatched,
        ]
    }

    pub fn is_ordered(&self) -> bool {
        self.timestamps().windows(2).all(|w| w[0] <= w[1])
    }
}

/// Everything that travels on the bus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BusMessage {
    Probes(ProbeBatch),
    Conditions(ConditionsUpdate),
    Obligations(ObligationsUpdate),
    Task(TaskRequest),
    Ack(FulfillmentAck),
    Record(EnforcementRecord),
    /// A probe batch left every condition unchanged; nothing was stepped.
    Unchanged {
        case: Option<String>,
        t_probe: u64,
    },
    /// A probe batch was rejected by the monitor.
    ProbeRejected {
        case: Option<String>,
        error: String,
    },
    /// Something worth logging that is not an error, e.g. a late ack.
    Notice {
        message: String,
    },
}
