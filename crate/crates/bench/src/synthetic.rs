//! Synthetic rulesets of a given shape, for scalability runs.
//!
//! Rule `Rk` has `c` clauses; clause `j` guards on its own boolean `a_k_j`
//! (negated or not, by seed) and demands its own capability `o_k_j`, so the
//! expected obligations identify every active clause. There are no scopes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sleec_core::syntax::{
    BoolExpr, Clause, MonitoredDecl, Obligation, ObligationAtom, Predicate, Rule, Ruleset,
    ValueKind, Vocabulary,
};
use sleec_enforcement::config::{TaskMapping, TaskSpec};
use sleec_enforcement::LoopConfig;
use thiserror::Error;

/// Rule counts of the scalability grid.
pub const GRID_RULES: [usize; 11] = [10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60];
/// Clauses per rule (base clause included) of the scalability grid.
pub const GRID_CLAUSES: [usize; 10] = [2, 4, 6, 8, 10, 12, 14, 16, 18, 20];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("a synthetic ruleset needs at least one rule and one clause per rule")]
pub struct EmptyShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub rules: usize,
    pub clauses: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(rules: usize, clauses: usize, seed: u64) -> Result<Self, EmptyShape> {
        if rules == 0 || clauses == 0 {
            return Err(EmptyShape);
        }
        Ok(SyntheticSpec {
            rules,
            clauses,
            seed,
        })
    }

    pub fn total_clauses(&self) -> usize {
        self.rules * self.clauses
    }

    /// All 110 grid points, rules-major. Each gets its own seed.
    pub fn grid(seed: u64) -> Vec<SyntheticSpec> {
        let mut out = Vec::new();
        for r in GRID_RULES {
            for c in GRID_CLAUSES {
                let seed = seed ^ ((r as u64) << 32 | c as u64);
                out.push(SyntheticSpec {
                    rules: r,
                    clauses: c,
                    seed,
                });
            }
        }
        out
    }
}

pub fn atom_name(rule: usize, clause: usize) -> String {
    format!("a_{rule}_{clause}")
}

pub fn capability_name(rule: usize, clause: usize) -> String {
    format!("o_{rule}_{clause}")
}

pub fn generate_synthetic_ruleset(spec: SyntheticSpec) -> Ruleset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut vocabulary = Vocabulary::default();
    let mut rules = Vec::with_capacity(spec.rules);
    for k in 1..=spec.rules {
        let mut clauses = Vec::with_capacity(spec.clauses);
        for j in 0..spec.clauses {
            let atom = atom_name(k, j);
            let capability = capability_name(k, j);
            vocabulary.monitored.push(MonitoredDecl {
                name: atom.clone(),
                kind: ValueKind::Boolean,
            });
            vocabulary.capabilities.push(capability.clone());
            let mut condition = BoolExpr::Atom(Predicate::Name(atom));
            if rng.gen_bool(0.5) {
                condition = BoolExpr::not(condition);
            }
            clauses.push(Clause {
                condition,
                obligation: Obligation {
                    atoms: vec![ObligationAtom::plain(capability)],
                },
            });
        }
        let mut clauses = clauses.into_iter();
        rules.push(Rule {
            id: format!("R{k}"),
            scope: None,
            base: clauses.next().expect("at least one clause"),
            hedges: clauses.collect(),
        });
    }
    Ruleset {
        vocabulary,
        rules,
        invariants: Vec::new(),
    }
}

/// Loop configuration mapping every capability of `rs` to one `log` task
/// naming the capability.
pub fn synthetic_config(rs: &Ruleset, server_url: &str) -> LoopConfig {
    let mut cfg = LoopConfig::new(server_url);
    cfg.capabilities = rs
        .vocabulary
        .capabilities
        .iter()
        .map(|c| {
            let task = TaskSpec::Full {
                task: "log".into(),
                params: vec![c.clone()],
            };
            (c.clone(), TaskMapping::Sequence(vec![task]))
        })
        .collect::<BTreeMap<_, _>>();
    cfg
}
