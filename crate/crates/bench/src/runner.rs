//! Replays test cases against the enforcement stack and checks the results.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sleec_core::syntax::Modifier;
use sleec_core::{compile, parse_ruleset, CompileError, ObligationSet, SnapshotMode};
use sleec_enforcement::config::RetryPolicy;
use sleec_enforcement::{
    plan_tasks, AckPolicy, BusMessage, Clock, EnforcementRecord, Enforcer, EnforcerError,
    InProcessBus, LoopConfig, LoopError, ManagedSystemMock, ProbeSample, TaskKind, TaskMap,
    TaskRequest, Transport as _, WallClock,
};
use thiserror::Error;

use crate::cases::TestCase;

/// How long one case may take before the run is abandoned.
const CASE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    /// Compiled rule machine called directly.
    InProcess,
    /// Model server over HTTP, called by the enforcer client.
    Http,
    /// Probes through monitor, enforcer and executor to a mock effector.
    FullLoop,
}

impl Transport {
    pub const ALL: [Transport; 3] = [Transport::InProcess, Transport::Http, Transport::FullLoop];

    pub fn name(self) -> &'static str {
        match self {
            Transport::InProcess => "in-process",
            Transport::Http => "http",
            Transport::FullLoop => "full-loop",
        }
    }
}

impl fmt::Display for Transport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Transport {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Transport::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                format!("unknown transport `{s}` (expected in-process, http or full-loop)")
            })
    }
}

/// Where to run the suite.
#[derive(Debug, Clone)]
pub enum Target {
    InProcess,
    Http {
        server_url: String,
    },
    /// `config` supplies the server URL and capability mapping.
    FullLoop {
        config: Box<LoopConfig>,
    },
}

impl Target {
    pub fn transport(&self) -> Transport {
        match self {
            Target::InProcess => Transport::InProcess,
            Target::Http { .. } => Transport::Http,
            Target::FullLoop { .. } => Transport::FullLoop,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub id: String,
    pub expected: Result<ObligationSet, String>,
    pub actual: Result<ObligationSet, String>,
    /// Task sequence differences, full loop only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tasks: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub matches: usize,
    pub mismatches: Vec<Mismatch>,
    /// One per case, in case order, with `matched` set.
    pub records: Vec<EnforcementRecord>,
}

#[derive(Debug, Error)]
pub enum RunErrorKind {
    #[error(transparent)]
    Parse(#[from] sleec_core::ParseError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Enforcer(#[from] EnforcerError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error("case `{0}` produced no result within {CASE_TIMEOUT:?}")]
    Timeout(String),
    #[error("case `{case}`: {message}")]
    Transport { case: String, message: String },
}

/// A run aborted by a transport failure, with the cases completed so far.
#[derive(Debug, Error)]
#[error("{kind}")]
pub struct RunError {
    pub kind: RunErrorKind,
    pub partial: Box<SuiteResult>,
}

impl RunError {
    fn new(kind: impl Into<RunErrorKind>, partial: SuiteResult) -> Self {
        RunError {
            kind: kind.into(),
            partial: Box::new(partial),
        }
    }
}

impl SuiteResult {
    fn push(
        &mut self,
        case: &TestCase,
        actual: Result<ObligationSet, String>,
        mut record: EnforcementRecord,
        tasks: Option<String>,
    ) {
        let ok = case.matches(&actual) && tasks.is_none();
        record.case = Some(case.id.clone());
        record.matched = Some(ok);
        if ok {
            self.matches += 1;
        } else {
            let expected = match &case.expected_error {
                Some(code) => Err(code.clone()),
                None => Ok(case.expected.clone()),
            };
            self.mismatches.push(Mismatch {
                id: case.id.clone(),
                expected,
                actual,
                tasks,
            });
        }
        self.records.push(record);
    }
}

/// Replays `cases` against `model` (ruleset source) through `target`.
pub async fn run_suite(
    model: &str,
    cases: &[TestCase],
    target: &Target,
) -> Result<SuiteResult, RunError> {
    match target {
        Target::InProcess => run_in_process(model, cases),
        Target::Http { server_url } => run_http(model, cases, server_url).await,
        Target::FullLoop { config } => run_full_loop(model, cases, config).await,
    }
}

fn run_in_process(model: &str, cases: &[TestCase]) -> Result<SuiteResult, RunError> {
    let mut result = SuiteResult::default();
    let rs = parse_ruleset(model).map_err(|e| RunError::new(e, SuiteResult::default()))?;
    let machine = compile(&rs).map_err(|e| RunError::new(e, SuiteResult::default()))?;
    let clock = WallClock::new();
    for case in cases {
        let t0 = clock.now();
        let outcome = machine.step(&case.snapshot);
        let t1 = clock.now();
        let record = EnforcementRecord {
            step: Some(result.records.len() as u64 + 1),
            t_probe: t0,
            t_conditions_published: t0,
            t_enforcer_in: t0,
            t_server_in: t0,
            t_server_out: t1,
            t_enforcer_out: t1,
            t_tasks_dispatched: t1,
            server_us: (t1 - t0) / 1_000,
            obligations: outcome.as_ref().ok().cloned(),
            ..EnforcementRecord::default()
        };
        result.push(
            case,
            outcome.map_err(|e| e.code().to_string()),
            record,
            None,
        );
    }
    Ok(result)
}

async fn run_http(
    model: &str,
    cases: &[TestCase],
    server_url: &str,
) -> Result<SuiteResult, RunError> {
    let mut result = SuiteResult::default();
    let enforcer = Enforcer::connect(
        server_url,
        model,
        None,
        SnapshotMode::Strict,
        RetryPolicy::default(),
        Arc::new(WallClock::new()),
    )
    .await
    .map_err(|e| RunError::new(e, SuiteResult::default()))?;
    for case in cases {
        let (outcome, record) = match enforcer.step(&case.snapshot).await {
            Ok(out) => {
                let record = EnforcementRecord {
                    step: Some(out.step),
                    t_probe: out.t_enforcer_in,
                    t_conditions_published: out.t_enforcer_in,
                    t_enforcer_in: out.t_enforcer_in,
                    t_server_in: out.t_server_in,
                    t_server_out: out.t_server_out,
                    t_enforcer_out: out.t_enforcer_out,
                    t_tasks_dispatched: out.t_enforcer_out,
                    server_us: out.server_us,
                    obligations: Some(out.obligations.clone()),
                    ..EnforcementRecord::default()
                };
                (Ok(out.obligations), record)
            }
            Err(EnforcerError::StepRejected { code, .. }) => {
                (Err(code), EnforcementRecord::default())
            }
            Err(e) => return Err(RunError::new(e, result)),
        };
        result.push(case, outcome, record, None);
    }
    let _ = enforcer.stop().await;
    Ok(result)
}

/// Tasks the executor must dispatch right away for `set` at `step`.
pub fn expected_immediate_tasks(set: &ObligationSet, map: &TaskMap, step: u64) -> Vec<TaskRequest> {
    set.directives
        .iter()
        .filter(|d| !matches!(d.modifier, Modifier::After(_)))
        .flat_map(|d| {
            plan_tasks(d, &d.capability, map, step, TaskKind::Immediate, 0).unwrap_or_default()
        })
        .collect()
}

fn task_signature(tasks: &[TaskRequest]) -> Vec<(String, Vec<String>, String)> {
    tasks
        .iter()
        .map(|t| (t.task.clone(), t.params.clone(), t.capability.clone()))
        .collect()
}

async fn run_full_loop(
    model: &str,
    cases: &[TestCase],
    config: &LoopConfig,
) -> Result<SuiteResult, RunError> {
    let mut result = SuiteResult::default();
    let bus = Arc::new(InProcessBus::new());
    let clock = Arc::new(WallClock::new());
    let mut config = config.clone();
    config.snapshot_mode = SnapshotMode::Strict;
    let map: TaskMap = config
        .capabilities
        .keys()
        .map(|c| (c.clone(), config.tasks_for(c).unwrap_or_default()))
        .collect();
    let handle = sleec_enforcement::start(config, model, bus.clone(), clock.clone())
        .await
        .map_err(|e| RunError::new(e, SuiteResult::default()))?;
    let mut records = bus.subscribe(&handle.channels().records);
    let mock = ManagedSystemMock::spawn(
        bus.clone(),
        handle.channels(),
        clock.clone(),
        AckPolicy::Never,
    );
    let mut previous: Option<Result<ObligationSet, String>> = None;

    for (i, case) in cases.iter().enumerate() {
        let samples = case
            .snapshot
            .values
            .iter()
            .map(|(k, v)| ProbeSample::new(k.clone(), v.clone(), i as u64))
            .collect();
        handle.inject(Some(case.id.clone()), samples);
        let msg = loop {
            let msg = match tokio::time::timeout(CASE_TIMEOUT, records.recv()).await {
                Ok(Some(msg)) => msg,
                _ => {
                    let _ = handle.shutdown().await;
                    return Err(RunError::new(
                        RunErrorKind::Timeout(case.id.clone()),
                        result,
                    ));
                }
            };
            if !matches!(msg, BusMessage::Notice { .. }) {
                break msg;
            }
        };
        let (outcome, record, tasks) = match msg {
            BusMessage::Record(record) => {
                if let Some(err) = &record.error {
                    if err.code.is_none() {
                        let message = format!("{}: {}", err.kind, err.message);
                        let _ = handle.shutdown().await;
                        return Err(RunError::new(
                            RunErrorKind::Transport {
                                case: case.id.clone(),
                                message,
                            },
                            result,
                        ));
                    }
                }
                let outcome = match (&record.obligations, &record.error) {
                    (_, Some(err)) => Err(err.code.clone().unwrap_or_default()),
                    (Some(set), None) => Ok(set.clone()),
                    (None, None) => Err("NO_RESULT".into()),
                };
                let step = record.step.unwrap_or_default();
                let expected = match &outcome {
                    Ok(set) => expected_immediate_tasks(set, &map, step),
                    Err(_) => Vec::new(),
                };
                let n = expected.len();
                let of_step = |ts: &[TaskRequest]| -> Vec<TaskRequest> {
                    ts.iter()
                        .filter(|t| t.step == step && t.kind == TaskKind::Immediate)
                        .cloned()
                        .collect()
                };
                mock.wait_until(
                    |ts| of_step(ts).len() >= n.max(record.tasks),
                    Duration::from_secs(5),
                )
                .await;
                let got = of_step(&mock.tasks());
                let tasks = (task_signature(&got) != task_signature(&expected)).then(|| {
                    format!(
                        "expected {:?}, dispatched {:?}",
                        task_signature(&expected),
                        task_signature(&got)
                    )
                });
                (outcome, record, tasks)
            }
            BusMessage::Unchanged { t_probe, .. } => {
                // Same conditions as the previous case: stateless rules give
                // the same obligations, and nothing is stepped.
                let outcome = previous.clone().unwrap_or_else(|| Err("NO_RESULT".into()));
                let record = EnforcementRecord {
                    t_probe,
                    t_conditions_published: t_probe,
                    t_enforcer_in: t_probe,
                    t_server_in: t_probe,
                    t_server_out: t_probe,
                    t_enforcer_out: t_probe,
                    t_tasks_dispatched: t_probe,
                    obligations: outcome.as_ref().ok().cloned(),
                    ..EnforcementRecord::default()
                };
                (outcome, record, None)
            }
            BusMessage::ProbeRejected { error, .. } => {
                (Err(error), EnforcementRecord::default(), None)
            }
            other => {
                let _ = handle.shutdown().await;
                let message = format!("unexpected message {other:?}");
                return Err(RunError::new(
                    RunErrorKind::Transport {
                        case: case.id.clone(),
                        message,
                    },
                    result,
                ));
            }
        };
        previous = Some(outcome.clone());
        result.push(case, outcome, record, tasks);
    }
    handle
        .shutdown()
        .await
        .map_err(|e| RunError::new(e, result.clone()))?;
    Ok(result)
}
