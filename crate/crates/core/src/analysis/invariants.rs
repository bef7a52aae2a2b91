use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::atoms::rule_atoms;
use super::domain::SnapshotSpace;
use super::{AnalysisError, AnalysisMode, EXHAUSTIVE_ATOM_LIMIT};
use crate::diagnostics::{codes, Diagnostic, Location, Severity};
use crate::engine::oracle::{emissions, Emission};
use crate::engine::{ConditionSnapshot, SnapshotMode};
use crate::syntax::{Modifier, Rule, Ruleset};

/// Witnesses reported per invariant or capability before truncating.
pub const MAX_WITNESSES: usize = 10;

/// Searches for snapshots whose obligations violate an invariant, and for
/// snapshots where one capability is demanded with two different temporal
/// constraints in the same step.
///
/// Only the rules that can emit the capabilities in question are evaluated,
/// and only over the variables those rules read; every other rule and
/// variable cannot change the outcome.
pub fn check_obligation_invariants(
    rs: &Ruleset,
    mode: AnalysisMode,
) -> Result<Vec<Diagnostic>, AnalysisError> {
    let mut diags = Vec::new();

    for inv in &rs.invariants {
        let caps: BTreeSet<&str> = inv.expr.atoms().into_iter().map(String::as_str).collect();
        let cone = cone(rs, &caps);
        let mut found = Vec::new();
        sweep(
            &cone,
            mode,
            &format!("invariant {}", inv.name),
            |space, snap, ems| {
                let enforced: BTreeSet<&str> = ems.iter().map(|e| e.capability.as_str()).collect();
                if !inv
                    .expr
                    .eval(&mut |c: &String| enforced.contains(c.as_str()))
                {
                    let culprits: Vec<String> = ems
                        .iter()
                        .filter(|e| caps.contains(e.capability.as_str()))
                        .map(|e| format!("{} from {}", e.capability, e.provenance))
                        .collect();
                    found.push((space.witness(snap), culprits.join(", ")));
                }
            },
        )?;
        let location = Location::Invariant {
            name: inv.name.clone(),
        };
        report(
            &mut diags,
            found,
            &location,
            |w| format!("invariant `{}` violated: {w}", inv.name),
            codes::INVARIANT_VIOLATION,
        );
    }

    let mut modifiers: std::collections::BTreeMap<&str, BTreeSet<(u8, u128, String)>> =
        Default::default();
    for rule in &rs.rules {
        for clause in rule.clauses() {
            for atom in &clause.obligation.atoms {
                let m = atom.modifier.canonical();
                let (a, b, c) = m.sort_key();
                modifiers
                    .entry(atom.capability.as_str())
                    .or_default()
                    .insert((a, b, c.to_string()));
            }
        }
    }
    for (cap, mods) in modifiers {
        if mods.len() < 2 {
            continue;
        }
        let cone = cone(rs, &BTreeSet::from([cap]));
        let mut found = Vec::new();
        let mut first_rule: Option<(String, usize)> = None;
        sweep(
            &cone,
            mode,
            &format!("capability {cap}"),
            |space, snap, ems| {
                let hits: Vec<&Emission> = ems.iter().filter(|e| e.capability == cap).collect();
                let distinct: Vec<&Modifier> = hits.iter().fold(Vec::new(), |mut acc, e| {
                    if !acc.contains(&&e.modifier) {
                        acc.push(&e.modifier);
                    }
                    acc
                });
                if distinct.len() > 1 {
                    if first_rule.is_none() {
                        let p = &hits[0].provenance;
                        first_rule = Some((p.rule.clone(), p.clause));
                    }
                    let from: Vec<String> = hits.iter().map(|e| e.provenance.to_string()).collect();
                    found.push((space.witness(snap), from.join(", ")));
                }
            },
        )?;
        let location = match first_rule {
            Some((rule, clause)) => Location::Rule {
                index: rs.rules.iter().position(|r| r.id == rule).unwrap_or(0),
                rule,
                clause: Some(clause),
            },
            None => continue,
        };
        report(
            &mut diags,
            found,
            &location,
            |w| format!("`{cap}` demanded with different temporal constraints by {w}"),
            codes::INCONSISTENT_UPDATE,
        );
    }
    Ok(diags)
}

type Found = Vec<(
    std::collections::BTreeMap<String, crate::value::Value>,
    String,
)>;

fn report(
    diags: &mut Vec<Diagnostic>,
    found: Found,
    location: &Location,
    message: impl Fn(&str) -> String,
    code: &str,
) {
    let total = found.len();
    for (witness, detail) in found.into_iter().take(MAX_WITNESSES) {
        diags.push(
            Diagnostic::new(Severity::Error, code, location.clone(), message(&detail))
                .with_witness(witness),
        );
    }
    if total > MAX_WITNESSES {
        diags.push(Diagnostic::new(
            Severity::Info,
            codes::WITNESSES_TRUNCATED,
            location.clone(),
            format!("{} further witness(es) not shown", total - MAX_WITNESSES),
        ));
    }
}

/// Sub-ruleset of the rules that can emit any of `caps`.
fn cone(rs: &Ruleset, caps: &BTreeSet<&str>) -> Ruleset {
    let emits = |r: &Rule| {
        r.clauses()
            .flat_map(|c| c.obligation.atoms.iter())
            .any(|a| caps.contains(a.capability.as_str()))
    };
    Ruleset {
        vocabulary: rs.vocabulary.clone(),
        rules: rs.rules.iter().filter(|r| emits(r)).cloned().collect(),
        invariants: Vec::new(),
    }
}

fn sweep(
    cone: &Ruleset,
    mode: AnalysisMode,
    subject: &str,
    mut check: impl FnMut(&SnapshotSpace, &ConditionSnapshot, &[Emission]),
) -> Result<(), AnalysisError> {
    let vars: BTreeSet<String> = cone
        .rules
        .iter()
        .flat_map(|r| rule_atoms(cone, r).atoms.into_iter().map(|a| a.var))
        .collect();
    let space = SnapshotSpace::new(cone, vars.iter().map(String::as_str));
    let mut visit = |snap: ConditionSnapshot| {
        let ems = emissions(cone, &snap, SnapshotMode::Strict)
            .expect("snapshots drawn from the vocabulary bind");
        check(&space, &snap, &ems);
    };
    match mode {
        AnalysisMode::Exhaustive => {
            let size = space.size();
            match size {
                Some(n) if n <= 1u128 << EXHAUSTIVE_ATOM_LIMIT => {
                    for i in 0..n {
                        visit(space.snapshot(i));
                    }
                }
                _ => {
                    return Err(AnalysisError::TooLarge {
                        subject: subject.to_string(),
                        size: size.map_or_else(|| "more than 2^128".into(), |n| n.to_string()),
                        limit: EXHAUSTIVE_ATOM_LIMIT,
                    })
                }
            }
        }
        AnalysisMode::Sampled { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..samples {
                visit(space.sample(&mut rng));
            }
        }
    }
    Ok(())
}
