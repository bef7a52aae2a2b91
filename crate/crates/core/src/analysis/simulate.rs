use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::engine::oracle::{emissions, merge, violated_invariants};
use crate::engine::{ConditionSnapshot, ObligationSet, SnapshotMode, StepError};
use crate::syntax::{Ruleset, ValueKind};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub index: usize,
    pub snapshot: ConditionSnapshot,
    /// Merged obligations; `None` when merging failed.
    pub obligations: Option<ObligationSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<StepError>,
    /// Names of invariants violated by `obligations`.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    pub seed: u64,
    pub steps: Vec<TraceStep>,
}

impl SimulationTrace {
    pub fn violation_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| !s.violations.is_empty())
            .count()
    }
}

/// Draws one uniformly random value per monitored variable.
pub fn random_snapshot(rs: &Ruleset, rng: &mut impl Rng) -> ConditionSnapshot {
    let mut snap = ConditionSnapshot::new();
    for m in &rs.vocabulary.monitored {
        let v = match &m.kind {
            ValueKind::Boolean => Value::Bool(rng.gen()),
            ValueKind::Integer { min, max } => Value::Int(rng.gen_range(*min..=*max)),
            ValueKind::Real { min, max } if min < max => Value::Real(rng.gen_range(*min..=*max)),
            ValueKind::Real { min, .. } => Value::Real(*min),
            ValueKind::Enumerant { members } => {
                Value::Enum(members[rng.gen_range(0..members.len())].clone())
            }
        };
        snap.values.insert(m.name.clone(), v);
    }
    snap
}

/// Steps the reference interpreter over `steps` random snapshots.
/// The same `(rs, steps, seed)` always yields the same trace.
pub fn random_simulate(rs: &Ruleset, steps: usize, seed: u64) -> SimulationTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (0..steps)
        .map(|index| {
            let mut snapshot = random_snapshot(rs, &mut rng);
            snapshot.timestamp = Some(index as u64);
            let merged = emissions(rs, &snapshot, SnapshotMode::Strict).and_then(merge);
            match merged {
                Ok(set) => {
                    let violations = violated_invariants(rs, &set)
                        .into_iter()
                        .filter_map(|e| match e {
                            StepError::InvariantViolation { invariant, .. } => Some(invariant),
                            _ => None,
                        })
                        .collect();
                    TraceStep {
                        index,
                        snapshot,
                        obligations: Some(set),
                        error: None,
                        violations,
                    }
                }
                Err(e) => TraceStep {
                    index,
                    snapshot,
                    obligations: None,
                    error: Some(e),
                    violations: Vec::new(),
                },
            }
        })
        .collect();
    SimulationTrace { seed, steps }
}
