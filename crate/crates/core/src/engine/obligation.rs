use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::Modifier;

/// The clause that emitted an obligation atom; clause 0 is the base clause.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub rule: String,
    pub clause: usize,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.rule, self.clause)
    }
}

/// One capability the robot must realise this step.
///
/// Identical atoms emitted by several clauses are merged into one directive,
/// so `provenance` lists every emitting clause (sorted, never empty).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObligationDirective {
    pub capability: String,
    /// Durations are in canonical units.
    pub modifier: Modifier,
    pub provenance: Vec<Provenance>,
}

impl fmt::Display for ObligationDirective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.capability)?;
        match &self.modifier {
            Modifier::Immediate => {}
            Modifier::After(d) => write!(f, " AFTER {d}")?,
            Modifier::Within { deadline, fallback } => {
                write!(f, " WITHIN {deadline} OTHERWISE {fallback}")?
            }
        }
        let prov: Vec<String> = self.provenance.iter().map(|p| p.to_string()).collect();
        write!(f, " [{}]", prov.join(", "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EthicsStatus {
    /// No rule demands anything.
    Respectful,
    /// At least one obligation must be enforced.
    Critical,
}

impl fmt::Display for EthicsStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EthicsStatus::Respectful => "respectful",
            EthicsStatus::Critical => "critical",
        })
    }
}

/// Result of one step. Directives are sorted by capability, then modifier.
///
/// JSON: `{"directives": [...], "status": "respectful"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObligationSet {
    pub directives: Vec<ObligationDirective>,
    pub status: EthicsStatus,
}

impl ObligationSet {
    pub fn empty() -> Self {
        ObligationSet {
            directives: Vec::new(),
            status: EthicsStatus::Respectful,
        }
    }

    /// Sorts the directives and derives the status from them.
    pub fn from_directives(mut directives: Vec<ObligationDirective>) -> Self {
        directives.sort_by(|a, b| {
            a.capability
                .cmp(&b.capability)
                .then_with(|| a.modifier.sort_key().cmp(&b.modifier.sort_key()))
        });
        let status = if directives.is_empty() {
            EthicsStatus::Respectful
        } else {
            EthicsStatus::Critical
        };
        ObligationSet { directives, status }
    }

    pub fn is_respectful(&self) -> bool {
        self.status == EthicsStatus::Respectful
    }

    pub fn capabilities(&self) -> Vec<&str> {
        self.directives
            .iter()
            .map(|d| d.capability.as_str())
            .collect()
    }

    pub fn contains(&self, capability: &str) -> bool {
        self.directives.iter().any(|d| d.capability == capability)
    }

    pub fn get(&self, capability: &str) -> Option<&ObligationDirective> {
        self.directives.iter().find(|d| d.capability == capability)
    }
}

impl Default for ObligationSet {
    fn default() -> Self {
        Self::empty()
    }
}
