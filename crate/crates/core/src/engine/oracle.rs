//! Reference interpreter working directly on the syntax tree.
//!
//! Shares only snapshot binding with [`RuleMachine`](super::RuleMachine);
//! every other step (condition evaluation, clause selection, merging) is
//! implemented independently so the two can be tested against each other.

use std::collections::{BTreeMap, BTreeSet};

use super::snapshot::bind;
use super::{
    ConditionSnapshot, ObligationDirective, ObligationSet, Provenance, SnapshotMode, StepError,
};
use crate::syntax::{Condition, Literal, Modifier, Predicate, Rule, Ruleset, NOOP};
use crate::value::Value;

/// One obligation atom emitted by an active clause, before merging.
#[derive(Debug, Clone, PartialEq)]
pub struct Emission {
    pub capability: String,
    pub modifier: Modifier,
    pub provenance: Provenance,
}

pub fn oracle_step(rs: &Ruleset, snap: &ConditionSnapshot) -> Result<ObligationSet, StepError> {
    oracle_step_with(rs, snap, SnapshotMode::Strict)
}

pub fn oracle_step_with(
    rs: &Ruleset,
    snap: &ConditionSnapshot,
    mode: SnapshotMode,
) -> Result<ObligationSet, StepError> {
    let emissions = emissions(rs, snap, mode)?;
    let set = merge(emissions)?;
    if let Some(err) = violated_invariants(rs, &set).into_iter().next() {
        return Err(err);
    }
    Ok(set)
}

/// Environment after binding: monitored name to value.
fn environment(
    rs: &Ruleset,
    snap: &ConditionSnapshot,
    mode: SnapshotMode,
) -> Result<BTreeMap<String, Value>, StepError> {
    let values = bind(&rs.vocabulary, snap, mode)?;
    Ok(rs
        .vocabulary
        .monitored
        .iter()
        .map(|m| m.name.clone())
        .zip(values)
        .collect())
}

pub fn eval_condition(rs: &Ruleset, env: &BTreeMap<String, Value>, c: &Condition) -> bool {
    c.eval(&mut |p: &Predicate| eval_predicate(rs, env, p))
}

fn eval_predicate(rs: &Ruleset, env: &BTreeMap<String, Value>, p: &Predicate) -> bool {
    match p {
        Predicate::Name(name) => match rs.vocabulary.derived(name) {
            Some(d) => eval_condition(rs, env, &d.condition),
            None => env.get(name) == Some(&Value::Bool(true)),
        },
        Predicate::Compare { var, op, value } => {
            let Some(actual) = env.get(var) else {
                return false;
            };
            match (actual, value) {
                (Value::Bool(a), Literal::Bool(b)) => op.holds(a, b),
                (Value::Int(a), Literal::Int(b)) => op.holds(a, b),
                (Value::Real(a), lit) => lit.as_f64().is_some_and(|b| op.holds(*a, b)),
                (Value::Enum(a), Literal::Symbol(b)) => op.holds(a, b),
                _ => false,
            }
        }
    }
}

/// Largest `i` with the scope, C0, ..., Ci all true; `None` if the
/// effective trigger is false.
pub fn active_clause(rs: &Ruleset, env: &BTreeMap<String, Value>, rule: &Rule) -> Option<usize> {
    if let Some(scope) = &rule.scope {
        let scope = rs.vocabulary.scope(scope)?;
        if !eval_condition(rs, env, &scope.condition) {
            return None;
        }
    }
    let mut active = None;
    for (i, clause) in rule.clauses().enumerate() {
        if eval_condition(rs, env, &clause.condition) {
            active = Some(i);
        } else {
            break;
        }
    }
    active
}

/// Every non-`noop` atom of every active clause, unmerged.
pub fn emissions(
    rs: &Ruleset,
    snap: &ConditionSnapshot,
    mode: SnapshotMode,
) -> Result<Vec<Emission>, StepError> {
    let env = environment(rs, snap, mode)?;
    let mut out = Vec::new();
    for rule in &rs.rules {
        let Some(i) = active_clause(rs, &env, rule) else {
            continue;
        };
        let clause = rule.clause(i).expect("active clause exists");
        for atom in &clause.obligation.atoms {
            if atom.capability == NOOP {
                continue;
            }
            out.push(Emission {
                capability: atom.capability.clone(),
                modifier: atom.modifier.canonical(),
                provenance: Provenance {
                    rule: rule.id.clone(),
                    clause: i,
                },
            });
        }
    }
    Ok(out)
}

/// Merges identical (capability, modifier) pairs; differing modifiers on one
/// capability are a conflict, reported for the alphabetically first one.
pub fn merge(emissions: Vec<Emission>) -> Result<ObligationSet, StepError> {
    let mut by_cap: BTreeMap<String, Vec<Emission>> = BTreeMap::new();
    for e in emissions {
        by_cap.entry(e.capability.clone()).or_default().push(e);
    }
    let mut directives = Vec::new();
    for (capability, group) in by_cap {
        let mut modifiers: Vec<Modifier> = Vec::new();
        for e in &group {
            if !modifiers.contains(&e.modifier) {
                modifiers.push(e.modifier.clone());
            }
        }
        let provenance: Vec<Provenance> = group
            .iter()
            .map(|e| e.provenance.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if modifiers.len() > 1 {
            modifiers.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
            return Err(StepError::ConflictingConstraints {
                capability,
                modifiers,
                provenance,
            });
        }
        directives.push(ObligationDirective {
            capability,
            modifier: modifiers.pop().expect("group is non-empty"),
            provenance,
        });
    }
    Ok(ObligationSet::from_directives(directives))
}

/// Invariants (in declaration order) that `set` violates.
pub fn violated_invariants(rs: &Ruleset, set: &ObligationSet) -> Vec<StepError> {
    let enforced: BTreeSet<&str> = set.capabilities().into_iter().collect();
    rs.invariants
        .iter()
        .filter(|inv| {
            !inv.expr
                .eval(&mut |cap: &String| enforced.contains(cap.as_str()))
        })
        .map(|inv| {
            let mut witnesses: Vec<ObligationDirective> = Vec::new();
            for cap in inv.expr.atoms() {
                if let Some(d) = set.get(cap) {
                    if !witnesses.contains(d) {
                        witnesses.push(d.clone());
                    }
                }
            }
            StepError::InvariantViolation {
                invariant: inv.name.clone(),
                witnesses,
            }
        })
        .collect()
}
