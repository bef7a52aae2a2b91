//! `report.json` and `latency.csv`.
//!
//! `report.json`:
//!
//! ```json
//! {
//!   "seed": 7,
//!   "transport": "http",
//!   "suites": [{
//!     "name": "assistive", "rules": 9, "clauses": 23, "cases": 750, "matches": 750,
//!     "mismatches": [],
//!     "stages": {"total": {"count": 750, "mean": 0.41, ...}, "server": {...}, ...}
//!   }],
//!   "fits": {"fits": [{"model": "quadratic", "params": {...}, "r_squared": 0.99}], "failures": []}
//! }
//! ```
//!
//! Stage latencies are in milliseconds. `fits` regress the mean server-stage
//! latency of each suite on its total clause count and is only present for
//! multi-suite runs.
//!
//! `latency.csv` has one row per case: suite, case id, step, the seven
//! timestamps in nanoseconds, `server_us`, `matched` and an error kind.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sleec_enforcement::EnforcementRecord;

use crate::fit::{fit_models, FitError, FitSet};
use crate::runner::{Mismatch, SuiteResult, Transport};
use crate::stats::{compute_stats, OverheadStats};

/// Stage names, in pipeline order.
pub const STAGES: [&str; 7] = [
    "monitor", "bus", "enforcer", "network", "server", "executor", "total",
];

/// Duration of each stage of `r` in milliseconds.
pub fn stage_durations(r: &EnforcementRecord) -> [f64; 7] {
    let ms = |a: u64, b: u64| b.saturating_sub(a) as f64 / 1e6;
    let enforcer = ms(r.t_enforcer_in, r.t_enforcer_out);
    let server = ms(r.t_server_in, r.t_server_out);
    [
        ms(r.t_probe, r.t_conditions_published),
        ms(r.t_conditions_published, r.t_enforcer_in),
        enforcer,
        (enforcer - server).max(0.0),
        server,
        ms(r.t_enforcer_out, r.t_tasks_dispatched),
        ms(r.t_probe, r.t_tasks_dispatched),
    ]
}

/// Statistics per stage over the records that reached the server.
pub fn stage_stats(records: &[EnforcementRecord]) -> BTreeMap<String, OverheadStats> {
    let stepped: Vec<[f64; 7]> = records
        .iter()
        .filter(|r| r.step.is_some() && r.error.is_none())
        .map(stage_durations)
        .collect();
    STAGES
        .iter()
        .enumerate()
        .filter_map(|(i, name)| {
            let sample: Vec<f64> = stepped.iter().map(|d| d[i]).collect();
            compute_stats(&sample).ok().map(|s| (name.to_string(), s))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub rules: usize,
    pub clauses: usize,
    pub cases: usize,
    pub matches: usize,
    pub mismatches: Vec<Mismatch>,
    pub stages: BTreeMap<String, OverheadStats>,
}

impl SuiteReport {
    pub fn new(
        name: impl Into<String>,
        rules: usize,
        clauses: usize,
        result: &SuiteResult,
    ) -> Self {
        SuiteReport {
            name: name.into(),
            rules,
            clauses,
            cases: result.records.len(),
            matches: result.matches,
            mismatches: result.mismatches.clone(),
            stages: stage_stats(&result.records),
        }
    }

    pub fn mean_ms(&self, stage: &str) -> Option<f64> {
        self.stages.get(stage).map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub seed: u64,
    pub transport: Transport,
    pub suites: Vec<SuiteReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fits: Option<Result<FitSet, FitError>>,
}

impl BenchReport {
    pub fn new(seed: u64, transport: Transport, suites: Vec<SuiteReport>) -> Self {
        let fits = (suites.len() > 1).then(|| {
            let points: Vec<(f64, f64)> = suites
                .iter()
                .filter_map(|s| s.mean_ms("server").map(|m| (s.clauses as f64, m)))
                .collect();
            fit_models(&points)
        });
        BenchReport {
            seed,
            transport,
            suites,
            fits,
        }
    }

    pub fn cases(&self) -> usize {
        self.suites.iter().map(|s| s.cases).sum()
    }

    pub fn matches(&self) -> usize {
        self.suites.iter().map(|s| s.matches).sum()
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text + "\n")
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    suite: &'a str,
    case: &'a str,
    step: Option<u64>,
    t_probe: u64,
    t_conditions_published: u64,
    t_enforcer_in: u64,
    t_server_in: u64,
    t_server_out: u64,
    t_enforcer_out: u64,
    t_tasks_dispatched: u64,
    server_us: u64,
    matched: Option<bool>,
    error: &'a str,
}

/// Writes one CSV row per record; `suites` pairs a suite name with its records.
pub fn write_latency_csv<'a>(
    path: &Path,
    suites: impl IntoIterator<Item = (&'a str, &'a [EnforcementRecord])>,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for (suite, records) in suites {
        for r in records {
            w.serialize(CsvRow {
                suite,
                case: r.case.as_deref().unwrap_or_default(),
                step: r.step,
                t_probe: r.t_probe,
                t_conditions_published: r.t_conditions_published,
                t_enforcer_in: r.t_enforcer_in,
                t_server_in: r.t_server_in,
                t_server_out: r.t_server_out,
                t_enforcer_out: r.t_enforcer_out,
                t_tasks_dispatched: r.t_tasks_dispatched,
                server_us: r.server_us,
                matched: r.matched,
                error: r.error.as_ref().map_or("", |e| e.kind.as_str()),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
