//! Step evaluation: a compiled machine and an AST-walking oracle that must
//! agree on every snapshot.

mod machine;
mod obligation;
pub mod oracle;
mod snapshot;

use serde::Serialize;

pub use machine::{compile, CompileError, RuleMachine};
pub use obligation::{EthicsStatus, ObligationDirective, ObligationSet, Provenance};
pub use oracle::oracle_step;
pub use snapshot::{bind, ConditionSnapshot, SnapshotMode};

use crate::syntax::Modifier;

#[derive(Debug, Clone, PartialEq, thiserror::Error, Serialize)]
#[serde(tag = "error", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StepError {
    #[error("no binding for monitored variable `{variable}`")]
    MissingBinding { variable: String },
    #[error("`{variable}` expects {expected}, got {found}")]
    TypeMismatch {
        variable: String,
        expected: String,
        found: String,
    },
    #[error("`{variable}` is not a monitored variable")]
    UnknownVariable { variable: String },
    #[error("invariant `{invariant}` violated by {}", list_caps(.witnesses))]
    InvariantViolation {
        invariant: String,
        /// Directives of the invariant's capabilities that were enforced.
        witnesses: Vec<ObligationDirective>,
    },
    #[error("conflicting constraints on `{capability}`")]
    ConflictingConstraints {
        capability: String,
        modifiers: Vec<Modifier>,
        provenance: Vec<Provenance>,
    },
}

fn list_caps(ds: &[ObligationDirective]) -> String {
    ds.iter()
        .map(|d| d.capability.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

impl StepError {
    pub fn code(&self) -> &'static str {
        match self {
            StepError::MissingBinding { .. } => "MISSING_BINDING",
            StepError::TypeMismatch { .. } => "TYPE_MISMATCH",
            StepError::UnknownVariable { .. } => "UNKNOWN_VARIABLE",
            StepError::InvariantViolation { .. } => "INVARIANT_VIOLATION",
            StepError::ConflictingConstraints { .. } => "CONFLICTING_CONSTRAINTS",
        }
    }

    /// True for errors caused by a malformed snapshot rather than by the rules.
    pub fn is_snapshot_error(&self) -> bool {
        matches!(
            self,
            StepError::MissingBinding { .. }
                | StepError::TypeMismatch { .. }
                | StepError::UnknownVariable { .. }
        )
    }
}
