use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::syntax::{BoolExpr, Condition, Literal, Predicate, RelOp, Rule, Ruleset, ValueKind};

/// Truth value per atom, keyed by the atom's printed form.
pub type AtomAssignment = BTreeMap<String, bool>;

/// A condition atom with negation factored out: the operator is one of
/// `=`, `<`, `<=`, and boolean atoms are always `name = TRUE`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CanonicalAtom {
    pub var: String,
    pub op: RelOp,
    /// Literal in a kind-normalized textual form.
    pub value: String,
}

impl fmt::Display for CanonicalAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.op == RelOp::Eq && self.value == "TRUE" {
            f.write_str(&self.var)
        } else {
            write!(f, "{} {} {}", self.var, self.op, self.value)
        }
    }
}

/// A rule's conditions over its canonical atoms. Leaves are
/// `(atom index, negated)`; clause 0 includes the scope condition and
/// derived predicates are inlined.
#[derive(Debug, Clone)]
pub struct RuleAtoms {
    pub atoms: Vec<CanonicalAtom>,
    pub clauses: Vec<BoolExpr<(usize, bool)>>,
}

impl RuleAtoms {
    pub fn eval_clause(&self, clause: usize, bits: u64) -> bool {
        self.clauses[clause].eval(&mut |&(i, neg)| ((bits >> i) & 1 == 1) != neg)
    }

    /// Largest satisfied prefix of clause conditions.
    pub fn active_clause(&self, bits: u64) -> Option<usize> {
        let mut active = None;
        for i in 0..self.clauses.len() {
            if !self.eval_clause(i, bits) {
                break;
            }
            active = Some(i);
        }
        active
    }

    pub fn assignment(&self, bits: u64) -> AtomAssignment {
        self.atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (a.to_string(), (bits >> i) & 1 == 1))
            .collect()
    }
}

pub fn rule_atoms(rs: &Ruleset, rule: &Rule) -> RuleAtoms {
    let mut atoms = Vec::new();
    let mut clauses = Vec::new();
    for (i, clause) in rule.clauses().enumerate() {
        let mut cond = translate(rs, &clause.condition, &mut atoms);
        if i == 0 {
            if let Some(scope) = rule.scope.as_deref().and_then(|s| rs.vocabulary.scope(s)) {
                let scope = translate(rs, &scope.condition, &mut atoms);
                cond = BoolExpr::and(vec![scope, cond]);
            }
        }
        clauses.push(cond);
    }
    RuleAtoms { atoms, clauses }
}

fn translate(
    rs: &Ruleset,
    c: &Condition,
    atoms: &mut Vec<CanonicalAtom>,
) -> BoolExpr<(usize, bool)> {
    match c {
        BoolExpr::Const(b) => BoolExpr::Const(*b),
        BoolExpr::Not(inner) => BoolExpr::not(translate(rs, inner, atoms)),
        BoolExpr::And(items) => {
            BoolExpr::and(items.iter().map(|i| translate(rs, i, atoms)).collect())
        }
        BoolExpr::Or(items) => {
            BoolExpr::or(items.iter().map(|i| translate(rs, i, atoms)).collect())
        }
        BoolExpr::Atom(Predicate::Name(name)) if rs.vocabulary.derived(name).is_some() => {
            let d = rs.vocabulary.derived(name).expect("checked");
            translate(rs, &d.condition, atoms)
        }
        BoolExpr::Atom(p) => {
            let (atom, neg) = canonicalize(rs, p);
            let idx = match atoms.iter().position(|a| *a == atom) {
                Some(i) => i,
                None => {
                    atoms.push(atom);
                    atoms.len() - 1
                }
            };
            BoolExpr::Atom((idx, neg))
        }
    }
}

/// Canonical atom and polarity of a predicate (`true` = negated).
pub fn canonicalize(rs: &Ruleset, p: &Predicate) -> (CanonicalAtom, bool) {
    let (var, op, lit) = match p {
        Predicate::Name(n) => (n, RelOp::Eq, Literal::Bool(true)),
        Predicate::Compare { var, op, value } => (var, *op, value.clone()),
    };
    let kind = rs.vocabulary.monitored(var).map(|m| &m.kind);
    let atom = |op, value: String| CanonicalAtom {
        var: var.clone(),
        op,
        value,
    };
    if let Literal::Bool(b) = lit {
        // `x = FALSE` and `x != TRUE` are both `NOT x`
        let neg = (op == RelOp::Ne) == b;
        return (atom(RelOp::Eq, "TRUE".into()), neg);
    }
    let value = match (&lit, kind) {
        (Literal::Int(i), Some(ValueKind::Real { .. })) => format!("{:?}", *i as f64),
        (Literal::Int(i), _) => i.to_string(),
        (Literal::Real(r), _) => format!("{r:?}"),
        (Literal::Symbol(s), _) => s.clone(),
        (Literal::Bool(_), _) => unreachable!(),
    };
    let (op, neg) = match op {
        RelOp::Eq => (RelOp::Eq, false),
        RelOp::Ne => (RelOp::Eq, true),
        RelOp::Lt => (RelOp::Lt, false),
        RelOp::Ge => (RelOp::Lt, true),
        RelOp::Le => (RelOp::Le, false),
        RelOp::Gt => (RelOp::Le, true),
    };
    (atom(op, value), neg)
}
