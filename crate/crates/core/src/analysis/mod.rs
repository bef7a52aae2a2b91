//! Static and simulation-based checks over rulesets.
//!
//! Report JSON schema (`analyze --json`):
//!
//! ```json
//! {
//!   "mode": {"kind": "exhaustive"} | {"kind": "sampled", "samples": 1000, "seed": 7},
//!   "diagnostics": [
//!     {"severity": "error|warning|info", "code": "DEAD_CLAUSE", "message": "...",
//!      "location": {"kind": "rule", "rule": "S2", "index": 3, "clause": 2},
//!      "witness": {"userReady": true}}
//!   ],
//!   "errors": 0, "warnings": 1, "infos": 0
//! }
//! ```

mod atoms;
mod dead;
mod domain;
mod invariants;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Diagnostic, Severity};
use crate::syntax::{validate, Ruleset};

pub use atoms::{rule_atoms, AtomAssignment, CanonicalAtom, RuleAtoms};
pub use dead::detect_dead_clauses;
pub use domain::{candidate_values, SnapshotSpace};
pub use invariants::check_obligation_invariants;
pub use simulate::{random_simulate, random_snapshot, SimulationTrace, TraceStep};

/// Largest number of assignments (as a power of two) enumerated exhaustively.
pub const EXHAUSTIVE_ATOM_LIMIT: u32 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnalysisMode {
    #[default]
    Exhaustive,
    Sampled {
        samples: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("{subject} needs {size} enumerated cases, above the exhaustive limit of 2^{limit}; use sampled mode")]
    TooLarge {
        subject: String,
        size: String,
        limit: u32,
    },
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::TooLarge { .. } => "ANALYSIS_TOO_LARGE",
        }
    }
}

/// Name resolution, type checks and unused-vocabulary warnings.
pub fn check_well_formed(rs: &Ruleset) -> Vec<Diagnostic> {
    validate(rs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub mode: AnalysisMode,
    pub diagnostics: Vec<Diagnostic>,
    pub errors: usize,
    pub warnings: usize,
    pub infos: usize,
}

impl AnalysisReport {
    pub fn new(mode: AnalysisMode, diagnostics: Vec<Diagnostic>) -> Self {
        let count = |s| diagnostics.iter().filter(|d| d.severity == s).count();
        AnalysisReport {
            mode,
            errors: count(Severity::Error),
            warnings: count(Severity::Warning),
            infos: count(Severity::Info),
            diagnostics,
        }
    }
}

/// Runs every analysis. Semantic analyses are skipped when the ruleset has
/// well-formedness errors.
pub fn analyze(rs: &Ruleset, mode: AnalysisMode) -> Result<AnalysisReport, AnalysisError> {
    let mut diags = check_well_formed(rs);
    if !crate::diagnostics::has_errors(&diags) {
        diags.extend(detect_dead_clauses(rs, mode)?);
        diags.extend(check_obligation_invariants(rs, mode)?);
    }
    Ok(AnalysisReport::new(mode, diags))
}
