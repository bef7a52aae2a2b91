//! Test cases with oracle-computed expectations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sleec_core::analysis::random_snapshot;
use sleec_core::{oracle_step, ConditionSnapshot, ObligationSet, Ruleset};
use thiserror::Error;

/// A snapshot and what enforcing it must produce.
///
/// `expected` is the reference interpreter's output; when the interpreter
/// rejects the snapshot, `expected` is empty and `expected_error` holds the
/// error code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub snapshot: ConditionSnapshot,
    pub expected: ObligationSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_error: Option<String>,
}

impl TestCase {
    pub fn from_snapshot(rs: &Ruleset, id: impl Into<String>, snapshot: ConditionSnapshot) -> Self {
        let (expected, expected_error) = match oracle_step(rs, &snapshot) {
            Ok(set) => (set, None),
            Err(e) => (ObligationSet::empty(), Some(e.code().to_string())),
        };
        TestCase {
            id: id.into(),
            snapshot,
            expected,
            expected_error,
        }
    }

    /// Whether an enforcement outcome agrees with the expectation.
    pub fn matches(&self, outcome: &Result<ObligationSet, String>) -> bool {
        match (outcome, &self.expected_error) {
            (Ok(set), None) => *set == self.expected,
            (Err(code), Some(expected)) => code == expected,
            _ => false,
        }
    }
}

/// `n` cases with every monitored variable drawn uniformly (numbers over
/// their declared range). Deterministic in `(rs, n, seed)`.
pub fn generate_test_cases(rs: &Ruleset, n: usize, seed: u64) -> Vec<TestCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| TestCase::from_snapshot(rs, format!("case-{i:04}"), random_snapshot(rs, &mut rng)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("case `{id}`: stored expectation differs from a fresh evaluation")]
pub struct GroundTruthMismatch {
    pub id: String,
}

impl GroundTruthMismatch {
    pub fn code(&self) -> &'static str {
        "GROUND_TRUTH_MISMATCH"
    }
}

/// Recomputes every expectation; used when cases are loaded from disk.
pub fn verify_cases(rs: &Ruleset, cases: &[TestCase]) -> Result<(), GroundTruthMismatch> {
    for c in cases {
        let fresh = TestCase::from_snapshot(rs, c.id.clone(), c.snapshot.clone());
        if fresh != *c {
            return Err(GroundTruthMismatch { id: c.id.clone() });
        }
    }
    Ok(())
}
