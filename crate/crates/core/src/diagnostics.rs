//! Diagnostics shared by name resolution and the analyses.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::value::Value;

/// Stable diagnostic codes.
pub mod codes {
    pub const DUPLICATE_RULE_ID: &str = "DUPLICATE_RULE_ID";
    pub const DUPLICATE_NAME: &str = "DUPLICATE_NAME";
    pub const RESERVED_NAME: &str = "RESERVED_NAME";
    pub const UNDECLARED_CAPABILITY: &str = "UNDECLARED_CAPABILITY";
    pub const UNDECLARED_VARIABLE: &str = "UNDECLARED_VARIABLE";
    pub const UNDECLARED_SCOPE: &str = "UNDECLARED_SCOPE";
    pub const TYPE_MISMATCH: &str = "TYPE_MISMATCH";
    pub const DERIVED_REFERENCE: &str = "DERIVED_REFERENCE";
    pub const FALSE_HEDGE: &str = "FALSE_HEDGE";
    pub const EMPTY_OBLIGATION: &str = "EMPTY_OBLIGATION";
    pub const EMPTY_DOMAIN: &str = "EMPTY_DOMAIN";
    pub const INVALID_RANGE: &str = "INVALID_RANGE";
    pub const INVALID_DURATION: &str = "INVALID_DURATION";
    pub const UNUSED_MONITORED: &str = "UNUSED_MONITORED";
    pub const UNUSED_CAPABILITY: &str = "UNUSED_CAPABILITY";
    pub const UNUSED_DERIVED: &str = "UNUSED_DERIVED";
    pub const UNUSED_SCOPE: &str = "UNUSED_SCOPE";
    pub const DEAD_CLAUSE: &str = "DEAD_CLAUSE";
    pub const INVARIANT_VIOLATION: &str = "INVARIANT_VIOLATION";
    pub const INCONSISTENT_UPDATE: &str = "INCONSISTENT_UPDATE";
    pub const WITNESSES_TRUNCATED: &str = "WITNESSES_TRUNCATED";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        })
    }
}

/// What part of a ruleset a diagnostic is about.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Location {
    /// A rule, optionally narrowed to one clause (0 = base clause, i = i-th hedge).
    Rule {
        rule: String,
        index: usize,
        clause: Option<usize>,
    },
    Vocabulary {
        name: String,
    },
    Invariant {
        name: String,
    },
    Ruleset,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Rule {
                rule,
                clause: Some(c),
                ..
            } => write!(f, "rule {rule} clause {c}"),
            Location::Rule { rule, .. } => write!(f, "rule {rule}"),
            Location::Vocabulary { name } => write!(f, "vocabulary entry {name}"),
            Location::Invariant { name } => write!(f, "invariant {name}"),
            Location::Ruleset => f.write_str("ruleset"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: String,
    pub message: String,
    pub location: Location,
    /// Snapshot assignment demonstrating the problem, for analyses that find one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<BTreeMap<String, Value>>,
}

impl Diagnostic {
    pub fn new(
        severity: Severity,
        code: &str,
        location: Location,
        message: impl Into<String>,
    ) -> Self {
        Diagnostic {
            severity,
            code: code.to_string(),
            message: message.into(),
            location,
            witness: None,
        }
    }

    pub fn error(code: &str, location: Location, message: impl Into<String>) -> Self {
        Self::new(Severity::Error, code, location, message)
    }

    pub fn warning(code: &str, location: Location, message: impl Into<String>) -> Self {
        Self::new(Severity::Warning, code, location, message)
    }

    pub fn with_witness(mut self, witness: BTreeMap<String, Value>) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} [{}] {}",
            self.severity, self.location, self.code, self.message
        )?;
        if let Some(w) = &self.witness {
            let parts: Vec<String> = w.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, " (witness: {})", parts.join(", "))?;
        }
        Ok(())
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
