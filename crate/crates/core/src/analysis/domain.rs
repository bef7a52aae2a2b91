use std::collections::BTreeSet;

use rand::Rng;

use crate::engine::ConditionSnapshot;
use crate::syntax::{MonitoredDecl, Predicate, Ruleset, ValueKind};
use crate::value::Value;

/// Values of `decl` that together realise every combination of truth values
/// the ruleset's comparisons on it can take: all booleans and enumerants,
/// and for numbers the range ends, each compared constant, and a point in
/// each gap between them.
pub fn candidate_values(rs: &Ruleset, decl: &MonitoredDecl) -> Vec<Value> {
    let constants = compared_constants(rs, &decl.name);
    match &decl.kind {
        ValueKind::Boolean => vec![Value::Bool(false), Value::Bool(true)],
        ValueKind::Enumerant { members } => {
            members.iter().map(|m| Value::Enum(m.clone())).collect()
        }
        ValueKind::Integer { min, max } => {
            let mut points = BTreeSet::from([*min, *max]);
            for c in constants {
                let c = c as i64;
                for p in [c.saturating_sub(1), c, c.saturating_add(1)] {
                    if (*min..=*max).contains(&p) {
                        points.insert(p);
                    }
                }
            }
            points.into_iter().map(Value::Int).collect()
        }
        ValueKind::Real { min, max } => {
            let mut points: Vec<f64> = vec![*min, *max];
            points.extend(constants.into_iter().filter(|c| (*min..=*max).contains(c)));
            points.sort_by(|a, b| a.total_cmp(b));
            points.dedup();
            let mut out = Vec::with_capacity(points.len() * 2);
            for w in points.windows(2) {
                out.push(w[0]);
                out.push(w[0] + (w[1] - w[0]) / 2.0);
            }
            out.extend(points.last());
            out.into_iter().map(Value::Real).collect()
        }
    }
}

fn compared_constants(rs: &Ruleset, var: &str) -> Vec<f64> {
    let mut conditions: Vec<_> = rs.vocabulary.derived.iter().map(|d| &d.condition).collect();
    conditions.extend(rs.vocabulary.scopes.iter().map(|s| &s.condition));
    for rule in &rs.rules {
        conditions.extend(rule.clauses().map(|c| &c.condition));
    }
    let mut out = Vec::new();
    for c in conditions {
        for p in c.atoms() {
            if let Predicate::Compare { var: v, value, .. } = p {
                if v == var {
                    if let Some(x) = value.as_f64() {
                        out.push(x);
                    }
                }
            }
        }
    }
    out
}

/// Finite product of candidate values for a subset of the monitored
/// variables; the rest stay at their values in `base`.
#[derive(Debug, Clone)]
pub struct SnapshotSpace {
    pub vars: Vec<(String, Vec<Value>)>,
    pub base: ConditionSnapshot,
}

impl SnapshotSpace {
    /// Space over `names` (monitored variables); other variables are fixed
    /// at `false`, the first enumerant or the lower bound.
    pub fn new<'a>(rs: &Ruleset, names: impl IntoIterator<Item = &'a str>) -> Self {
        let wanted: BTreeSet<&str> = names.into_iter().collect();
        let vars = rs
            .vocabulary
            .monitored
            .iter()
            .filter(|m| wanted.contains(m.name.as_str()))
            .map(|m| (m.name.clone(), candidate_values(rs, m)))
            .collect();
        SnapshotSpace {
            vars,
            base: ConditionSnapshot::all_false(&rs.vocabulary),
        }
    }

    /// Number of snapshots, or `None` on overflow.
    pub fn size(&self) -> Option<u128> {
        self.vars
            .iter()
            .try_fold(1u128, |acc, (_, vals)| acc.checked_mul(vals.len() as u128))
    }

    /// The `index`-th snapshot in mixed-radix order (first variable fastest).
    pub fn snapshot(&self, mut index: u128) -> ConditionSnapshot {
        let mut snap = self.base.clone();
        for (name, vals) in &self.vars {
            let n = vals.len() as u128;
            snap.values
                .insert(name.clone(), vals[(index % n) as usize].clone());
            index /= n;
        }
        snap
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ConditionSnapshot {
        let mut snap = self.base.clone();
        for (name, vals) in &self.vars {
            snap.values
                .insert(name.clone(), vals[rng.gen_range(0..vals.len())].clone());
        }
        snap
    }

    /// The bindings of this space's variables in `snap`.
    pub fn witness(&self, snap: &ConditionSnapshot) -> std::collections::BTreeMap<String, Value> {
        self.vars
            .iter()
            .filter_map(|(n, _)| snap.values.get(n).map(|v| (n.clone(), v.clone())))
            .collect()
    }
}
