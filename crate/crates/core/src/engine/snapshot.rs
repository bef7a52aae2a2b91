use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::StepError;
use crate::syntax::{ValueKind, Vocabulary};
use crate::value::Value;

/// Values of the monitored variables at one instant.
///
/// JSON: `{"values": {"userReady": true, "roomTemperature": 27}, "timestamp": 12}`;
/// `timestamp` is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionSnapshot {
    pub values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl ConditionSnapshot {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.values.insert(name.into(), value.into());
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.values.insert(name.into(), value.into());
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.values.get(name)
    }

    /// Snapshot binding every boolean to `false`, every enumeration to
    /// its first member and every number to its lower bound.
    pub fn all_false(vocab: &Vocabulary) -> Self {
        let mut snap = Self::new();
        for m in &vocab.monitored {
            let v = match &m.kind {
                ValueKind::Boolean => Value::Bool(false),
                ValueKind::Integer { min, .. } => Value::Int(*min),
                ValueKind::Real { min, .. } => Value::Real(*min),
                ValueKind::Enumerant { members } => {
                    Value::Enum(members.first().cloned().unwrap_or_default())
                }
            };
            snap.values.insert(m.name.clone(), v);
        }
        snap
    }
}

/// How to treat monitored variables absent from a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotMode {
    /// Every monitored variable must be bound.
    #[default]
    Strict,
    /// Missing booleans read as `false`; other kinds are still required.
    Lenient,
}

/// Checks `snap` against the vocabulary and returns one value per monitored
/// variable, in declaration order. Integer values bound to real variables
/// are widened. Names of derived predicates are accepted and ignored.
pub fn bind(
    vocab: &Vocabulary,
    snap: &ConditionSnapshot,
    mode: SnapshotMode,
) -> Result<Vec<Value>, StepError> {
    for (name, value) in &snap.values {
        let Some(decl) = vocab.monitored(name) else {
            if vocab.derived(name).is_some() {
                continue;
            }
            return Err(StepError::UnknownVariable {
                variable: name.clone(),
            });
        };
        let ok = match (&decl.kind, value) {
            (ValueKind::Boolean, Value::Bool(_)) => true,
            (ValueKind::Integer { .. }, Value::Int(_)) => true,
            (ValueKind::Real { .. }, Value::Int(_) | Value::Real(_)) => true,
            (ValueKind::Enumerant { members }, Value::Enum(s)) => members.contains(s),
            _ => false,
        };
        if !ok {
            return Err(StepError::TypeMismatch {
                variable: name.clone(),
                expected: describe_kind(&decl.kind),
                found: value.to_string(),
            });
        }
    }
    let mut out = Vec::with_capacity(vocab.monitored.len());
    for decl in &vocab.monitored {
        let v = match (snap.values.get(&decl.name), &decl.kind) {
            (Some(Value::Int(i)), ValueKind::Real { .. }) => Value::Real(*i as f64),
            (Some(v), _) => v.clone(),
            (None, ValueKind::Boolean) if mode == SnapshotMode::Lenient => Value::Bool(false),
            (None, _) => {
                return Err(StepError::MissingBinding {
                    variable: decl.name.clone(),
                })
            }
        };
        out.push(v);
    }
    Ok(out)
}

fn describe_kind(kind: &ValueKind) -> String {
    match kind {
        ValueKind::Enumerant { members } => format!("one of {{{}}}", members.join(", ")),
        other => other.name().to_string(),
    }
}
