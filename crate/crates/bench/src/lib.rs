//! Scenario fixtures, test-case and synthetic-ruleset generators, the suite
//! runner and the latency statistics behind the `sleec` CLI.

pub mod bench;
pub mod cases;
pub mod fit;
pub mod fixtures;
pub mod report;
pub mod runner;
pub mod stats;
pub mod synthetic;

pub use bench::{run_bench, scenario_suite, synthetic_suite, Suite};
pub use cases::{generate_test_cases, verify_cases, TestCase};
pub use fit::{fit_models, FitModel, FitReport, FitSet};
pub use fixtures::load_scenario;
pub use report::{BenchReport, SuiteReport};
pub use runner::{run_suite, SuiteResult, Target, Transport};
pub use stats::{compute_stats, OverheadStats};
pub use synthetic::{generate_synthetic_ruleset, SyntheticSpec};
