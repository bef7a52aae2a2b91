//! Core of the SLEEC enforcement stack.
//!
//! * [`syntax`] turns `.sleec` text into a [`Ruleset`] and back.
//! * [`analysis`] runs static and simulation-based validation over a ruleset.
//! * [`engine`] compiles a ruleset into a [`RuleMachine`] and evaluates
//!   enforcement steps, alongside an independent AST interpreter used as a
//!   differential oracle.

pub mod analysis;
pub mod diagnostics;
pub mod engine;
pub mod syntax;
pub mod value;

pub use diagnostics::{Diagnostic, Location, Severity};
pub use engine::{
    compile, oracle_step, CompileError, ConditionSnapshot, EthicsStatus, ObligationDirective,
    ObligationSet, Provenance, RuleMachine, SnapshotMode, StepError,
};
pub use syntax::{format_ruleset, parse_ruleset, ParseError, Ruleset};
pub use value::Value;
