//! Rulesets and configuration shipped under `fixtures/`, embedded at build
//! time so the CLI works from any directory.

use sleec_core::{parse_ruleset, ConditionSnapshot, Ruleset};
use sleec_enforcement::LoopConfig;

pub const SCENARIO: &str = include_str!("../../../fixtures/assistive.sleec");
pub const SCENARIO_CONFIG: &str = include_str!("../../../fixtures/assistive.config.json");
/// Two rules that demand `openDoor` and `closeDoor` together.
pub const CONFLICT: &str = include_str!("../../../fixtures/conflict.sleec");
/// A rule whose hedges guard on `a` and then `NOT a`.
pub const DEAD: &str = include_str!("../../../fixtures/dead.sleec");
pub const ALL_FALSE: &str = include_str!("../../../fixtures/all_false.json");

/// The nine-rule assistive-care ruleset.
pub fn load_scenario() -> Ruleset {
    parse_ruleset(SCENARIO).expect("scenario fixture parses")
}

/// Loop configuration for the scenario, pointed at `server_url`, without a
/// model path or record log.
pub fn scenario_config(server_url: &str) -> LoopConfig {
    let mut cfg = LoopConfig::from_json(SCENARIO_CONFIG).expect("scenario config parses");
    cfg.server_url = server_url.to_string();
    cfg.model_path = None;
    cfg.record_log = None;
    cfg
}

pub fn all_false_snapshot() -> ConditionSnapshot {
    serde_json::from_str(ALL_FALSE).expect("all-false snapshot parses")
}
