//! Turns raw probe samples into condition snapshots.
//!
//! The monitor keeps the latest value of every monitored variable and a
//! *condition view*: the values the rules actually observe. Booleans and
//! enumerations appear as-is; numeric variables appear only through the
//! comparisons used in rule and scope conditions (keyed by their printed
//! form, e.g. `roomTemperature >= 26`) and through derived predicates. A
//! delta is emitted only when the view changes.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sleec_core::engine::oracle::eval_condition;
use sleec_core::syntax::{format_condition, BoolExpr, Condition, Predicate, ValueKind};
use sleec_core::{ConditionSnapshot, Ruleset, SnapshotMode, Value};
use thiserror::Error;

use crate::config::Threshold;
use crate::messages::ProbeSample;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MonitorError {
    #[error("no monitored condition or threshold reads source `{probe}`")]
    UnknownSource { probe: String },
    #[error("sample for `{probe}` at {timestamp} is older than the previous one at {last}")]
    StaleSample {
        probe: String,
        timestamp: u64,
        last: u64,
    },
    #[error("`{probe}` expects {expected}, got {found}")]
    TypeMismatch {
        probe: String,
        expected: String,
        found: String,
    },
}

impl MonitorError {
    pub fn code(&self) -> &'static str {
        match self {
            MonitorError::UnknownSource { .. } => "UNKNOWN_SOURCE",
            MonitorError::StaleSample { .. } => "STALE_SAMPLE",
            MonitorError::TypeMismatch { .. } => "TYPE_MISMATCH",
        }
    }
}

/// Emitted when the condition view changed and the snapshot is complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionDelta {
    pub changed: BTreeMap<String, Value>,
    pub snapshot: ConditionSnapshot,
}

pub struct Monitor {
    ruleset: Arc<Ruleset>,
    mode: SnapshotMode,
    thresholds: HashMap<String, Vec<Threshold>>,
    /// Numeric comparisons the rules observe, keyed by printed form.
    comparisons: Vec<(String, Condition)>,
    cache: BTreeMap<String, Value>,
    last_timestamp: HashMap<String, u64>,
    published: Option<BTreeMap<String, Value>>,
}

impl Monitor {
    pub fn new(ruleset: Arc<Ruleset>, thresholds: &[Threshold], mode: SnapshotMode) -> Self {
        let mut by_source: HashMap<String, Vec<Threshold>> = HashMap::new();
        for t in thresholds {
            by_source
                .entry(t.source.clone())
                .or_default()
                .push(t.clone());
        }
        let mut monitor = Monitor {
            comparisons: Vec::new(),
            ruleset,
            mode,
            thresholds: by_source,
            cache: BTreeMap::new(),
            last_timestamp: HashMap::new(),
            published: None,
        };
        monitor.comparisons = observed_comparisons(&monitor.ruleset);
        monitor
    }

    pub fn ruleset(&self) -> &Ruleset {
        &self.ruleset
    }

    /// Switches to a new ruleset, keeping cached values of variables it still
    /// declares with the same kind. The next complete snapshot is published
    /// in full.
    pub fn replace_ruleset(&mut self, ruleset: Arc<Ruleset>) {
        let old = std::mem::replace(&mut self.ruleset, ruleset);
        self.cache.retain(|name, _| {
            match (
                old.vocabulary.monitored(name),
                self.ruleset.vocabulary.monitored(name),
            ) {
                (Some(a), Some(b)) => a.kind == b.kind,
                _ => false,
            }
        });
        self.comparisons = observed_comparisons(&self.ruleset);
        self.published = None;
    }

    pub fn process(
        &mut self,
        sample: &ProbeSample,
    ) -> Result<Option<ConditionDelta>, MonitorError> {
        self.process_batch(std::slice::from_ref(sample))
    }

    /// Applies every sample, then compares the view once. A rejected sample
    /// leaves the monitor unchanged.
    pub fn process_batch(
        &mut self,
        samples: &[ProbeSample],
    ) -> Result<Option<ConditionDelta>, MonitorError> {
        let mut cache = self.cache.clone();
        let mut stamps = self.last_timestamp.clone();
        for s in samples {
            if let Some(&last) = stamps.get(&s.source) {
                if s.timestamp < last {
                    return Err(MonitorError::StaleSample {
                        probe: s.source.clone(),
                        timestamp: s.timestamp,
                        last,
                    });
                }
            }
            for (name, value) in self.interpret(s)? {
                cache.insert(name, value);
            }
            stamps.insert(s.source.clone(), s.timestamp);
        }
        self.cache = cache;
        self.last_timestamp = stamps;
        Ok(self.delta())
    }

    /// Current snapshot, whether or not it is complete.
    pub fn snapshot(&self) -> ConditionSnapshot {
        ConditionSnapshot {
            values: self.cache.clone(),
            timestamp: None,
        }
    }

    /// Whether every variable the snapshot mode requires has been observed.
    pub fn is_complete(&self) -> bool {
        self.ruleset.vocabulary.monitored.iter().all(|m| {
            self.cache.contains_key(&m.name)
                || (self.mode == SnapshotMode::Lenient && m.kind == ValueKind::Boolean)
        })
    }

    /// Validated `(variable, value)` updates carried by one sample.
    fn interpret(&self, s: &ProbeSample) -> Result<Vec<(String, Value)>, MonitorError> {
        let mismatch = |expected: String| MonitorError::TypeMismatch {
            probe: s.source.clone(),
            expected,
            found: format!("{} {}", s.value.kind_name(), s.value),
        };
        if let Some(decl) = self.ruleset.vocabulary.monitored(&s.source) {
            let value = match (&decl.kind, &s.value) {
                (ValueKind::Boolean, Value::Bool(_))
                | (ValueKind::Integer { .. }, Value::Int(_)) => s.value.clone(),
                (ValueKind::Real { .. }, Value::Real(r)) => Value::Real(*r),
                (ValueKind::Real { .. }, Value::Int(i)) => Value::Real(*i as f64),
                (ValueKind::Enumerant { members }, Value::Enum(e)) if members.contains(e) => {
                    s.value.clone()
                }
                (ValueKind::Enumerant { members }, _) => {
                    return Err(mismatch(format!("one of {{{}}}", members.join(", "))))
                }
                (kind, _) => return Err(mismatch(kind.name().to_string())),
            };
            return Ok(vec![(s.source.clone(), value)]);
        }
        let Some(thresholds) = self.thresholds.get(&s.source) else {
            return Err(MonitorError::UnknownSource {
                probe: s.source.clone(),
            });
        };
        let reading = match s.value {
            Value::Int(i) => i as f64,
            Value::Real(r) => r,
            _ => return Err(mismatch("a number".into())),
        };
        Ok(thresholds
            .iter()
            .map(|t| {
                (
                    t.condition.clone(),
                    Value::Bool(t.op.holds(reading, t.value)),
                )
            })
            .collect())
    }

    fn view(&self) -> BTreeMap<String, Value> {
        let rs = &self.ruleset;
        let mut env = self.cache.clone();
        if self.mode == SnapshotMode::Lenient {
            for m in &rs.vocabulary.monitored {
                if m.kind == ValueKind::Boolean {
                    env.entry(m.name.clone()).or_insert(Value::Bool(false));
                }
            }
        }
        let mut view: BTreeMap<String, Value> = self
            .cache
            .iter()
            .filter(|(name, _)| {
                rs.vocabulary
                    .monitored(name)
                    .is_some_and(|m| !m.kind.is_numeric())
            })
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for d in &rs.vocabulary.derived {
            let holds = eval_condition(rs, &env, &d.condition);
            view.insert(d.name.clone(), Value::Bool(holds));
        }
        for (key, c) in &self.comparisons {
            view.insert(key.clone(), Value::Bool(eval_condition(rs, &env, c)));
        }
        view
    }

    fn delta(&mut self) -> Option<ConditionDelta> {
        if !self.is_complete() {
            return None;
        }
        let view = self.view();
        let changed: BTreeMap<String, Value> = match &self.published {
            None => view.clone(),
            Some(prev) => view
                .iter()
                .filter(|(k, v)| prev.get(*k) != Some(*v))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        if self.published.is_some() && changed.is_empty() {
            return None;
        }
        self.published = Some(view);
        Some(ConditionDelta {
            changed,
            snapshot: self.snapshot(),
        })
    }
}

/// Numeric comparisons appearing directly in rule or scope conditions.
fn observed_comparisons(rs: &Ruleset) -> Vec<(String, Condition)> {
    let mut out: BTreeMap<String, Condition> = BTreeMap::new();
    let conditions = rs
        .rules
        .iter()
        .flat_map(|r| r.clauses().map(|c| &c.condition))
        .chain(rs.vocabulary.scopes.iter().map(|s| &s.condition));
    for c in conditions {
        for p in c.atoms() {
            if let Predicate::Compare { var, .. } = p {
                if rs
                    .vocabulary
                    .monitored(var)
                    .is_some_and(|m| m.kind.is_numeric())
                {
                    let atom = BoolExpr::Atom(p.clone());
                    out.insert(format_condition(&atom), atom);
                }
            }
        }
    }
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use sleec_core::parse_ruleset;

    const RULES: &str = "VOCABULARY
  MONITORED temp: INTEGER RANGE 0..50
  MONITORED busy: BOOLEAN
  MONITORED level: REAL RANGE 0.0..1.0
  CAPABILITY cool, wait
  DERIVED hot := temp >= 26
END
RULE R1
IF hot AND NOT busy THEN cool
RULE R2
IF level > 0.5 THEN wait
";

    fn monitor(mode: SnapshotMode) -> Monitor {
        Monitor::new(Arc::new(parse_ruleset(RULES).unwrap()), &[], mode)
    }

    #[test]
    fn holds_until_complete_in_strict_mode() {
        let mut m = monitor(SnapshotMode::Strict);
        assert_eq!(
            m.process(&ProbeSample::new("temp", 20i64, 0)).unwrap(),
            None
        );
        assert_eq!(
            m.process(&ProbeSample::new("busy", false, 0)).unwrap(),
            None
        );
        let d = m
            .process(&ProbeSample::new("level", 0.2, 0))
            .unwrap()
            .unwrap();
        let keys: Vec<&str> = d.changed.keys().map(String::as_str).collect();
        assert_eq!(keys, ["busy", "hot", "level > 0.5"]);
        assert_eq!(d.snapshot.values.len(), 3);
    }

    #[test]
    fn ints_widen_for_real_variables() {
        let mut m = monitor(SnapshotMode::Lenient);
        m.process_batch(&[
            ProbeSample::new("temp", 20i64, 0),
            ProbeSample::new("level", 1i64, 0),
        ])
        .unwrap();
        assert_eq!(m.snapshot().get("level"), Some(&Value::Real(1.0)));
    }

    #[test]
    fn rejected_batch_leaves_state_untouched() {
        let mut m = monitor(SnapshotMode::Lenient);
        let err = m
            .process_batch(&[
                ProbeSample::new("temp", 30i64, 5),
                ProbeSample::new("busy", 3i64, 5),
            ])
            .unwrap_err();
        assert_eq!(err.code(), "TYPE_MISMATCH");
        assert!(m.snapshot().values.is_empty());
    }
}
