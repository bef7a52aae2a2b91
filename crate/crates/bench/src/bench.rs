//! Runs whole suites: spawns a model server when needed and assembles the
//! report.

use sleec_core::format_ruleset;
use sleec_enforcement::LoopConfig;
use sleec_server::{spawn, ServerState};

use crate::cases::{generate_test_cases, TestCase};
use crate::fixtures::{load_scenario, scenario_config, SCENARIO};
use crate::report::{BenchReport, SuiteReport};
use crate::runner::{run_suite, RunError, RunErrorKind, SuiteResult, Target, Transport};
use crate::synthetic::{generate_synthetic_ruleset, synthetic_config, SyntheticSpec};

/// One ruleset and the cases to replay against it.
#[derive(Debug, Clone)]
pub struct Suite {
    pub name: String,
    pub model: String,
    pub rules: usize,
    pub clauses: usize,
    pub cases: Vec<TestCase>,
    /// Capability mapping for the full loop; its server URL is replaced.
    pub config: LoopConfig,
}

pub fn scenario_suite(cases: usize, seed: u64) -> Suite {
    let rs = load_scenario();
    Suite {
        name: "assistive".into(),
        model: SCENARIO.to_string(),
        rules: rs.rules.len(),
        clauses: rs.rules.iter().map(|r| r.clause_count()).sum(),
        cases: generate_test_cases(&rs, cases, seed),
        config: scenario_config(""),
    }
}

pub fn synthetic_suite(spec: SyntheticSpec, cases: usize) -> Suite {
    let rs = generate_synthetic_ruleset(spec);
    Suite {
        name: format!("synthetic-r{}-c{}", spec.rules, spec.clauses),
        model: format_ruleset(&rs),
        rules: spec.rules,
        clauses: spec.total_clauses(),
        cases: generate_test_cases(&rs, cases, spec.seed),
        config: synthetic_config(&rs, ""),
    }
}

/// Any ruleset source, with generated cases and a caller-supplied mapping.
pub fn model_suite(
    name: &str,
    model: &str,
    config: LoopConfig,
    cases: usize,
    seed: u64,
) -> Result<Suite, RunError> {
    let rs = sleec_core::parse_ruleset(model).map_err(|e| RunError {
        kind: RunErrorKind::Parse(e),
        partial: Box::default(),
    })?;
    Ok(Suite {
        name: name.to_string(),
        model: model.to_string(),
        rules: rs.rules.len(),
        clauses: rs.rules.iter().map(|r| r.clause_count()).sum(),
        cases: generate_test_cases(&rs, cases, seed),
        config,
    })
}

/// Runs every suite through `transport`. Without `server_url`, HTTP and
/// full-loop runs use a server spawned on a free local port.
pub async fn run_bench(
    suites: &[Suite],
    transport: Transport,
    server_url: Option<&str>,
    seed: u64,
) -> Result<(BenchReport, Vec<SuiteResult>), RunError> {
    let spawned = match (transport, server_url) {
        (Transport::InProcess, _) | (_, Some(_)) => None,
        _ => Some(
            spawn(
                "127.0.0.1:0".parse().expect("literal address"),
                ServerState::new(),
            )
            .await
            .map_err(|e| RunError {
                kind: RunErrorKind::Transport {
                    case: String::new(),
                    message: format!("cannot start model server: {e}"),
                },
                partial: Box::default(),
            })?,
        ),
    };
    let url = server_url
        .map(str::to_string)
        .or_else(|| spawned.as_ref().map(|s| s.url()))
        .unwrap_or_default();

    let mut reports = Vec::new();
    let mut results = Vec::new();
    for suite in suites {
        let target = match transport {
            Transport::InProcess => Target::InProcess,
            Transport::Http => Target::Http {
                server_url: url.clone(),
            },
            Transport::FullLoop => {
                let mut config = suite.config.clone();
                config.server_url = url.clone();
                Target::FullLoop {
                    config: Box::new(config),
                }
            }
        };
        let result = run_suite(&suite.model, &suite.cases, &target).await?;
        reports.push(SuiteReport::new(
            &suite.name,
            suite.rules,
            suite.clauses,
            &result,
        ));
        results.push(result);
    }
    if let Some(s) = spawned {
        let _ = s.shutdown().await;
    }
    Ok((BenchReport::new(seed, transport, reports), results))
}
