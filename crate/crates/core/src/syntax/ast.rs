//! Abstract syntax of a SLEEC ruleset.
//!
//! Boolean expressions are kept in a normalized shape: `And`/`Or` nodes are
//! n-ary with at least two children and never directly contain a node of the
//! same connective. The parser always produces this shape (parenthesized
//! groups of the same connective are spliced into their parent), which is what
//! makes `parse(format(x)) == x` hold.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Name of the reserved empty-effect capability ("do nothing").
pub const NOOP: &str = "noop";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Ruleset {
    pub vocabulary: Vocabulary,
    pub rules: Vec<Rule>,
    pub invariants: Vec<ObligationInvariant>,
}

impl Ruleset {
    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    pub monitored: Vec<MonitoredDecl>,
    pub capabilities: Vec<String>,
    pub derived: Vec<NamedCondition>,
    pub scopes: Vec<NamedCondition>,
}

impl Vocabulary {
    pub fn monitored(&self, name: &str) -> Option<&MonitoredDecl> {
        self.monitored.iter().find(|m| m.name == name)
    }

    pub fn derived(&self, name: &str) -> Option<&NamedCondition> {
        self.derived.iter().find(|d| d.name == name)
    }

    pub fn scope(&self, name: &str) -> Option<&NamedCondition> {
        self.scopes.iter().find(|s| s.name == name)
    }

    pub fn has_capability(&self, name: &str) -> bool {
        name == NOOP || self.capabilities.iter().any(|c| c == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitoredDecl {
    pub name: String,
    pub kind: ValueKind,
}

/// Declared type of a monitored variable. Numeric kinds carry an inclusive
/// range, which bounds random simulation and exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ValueKind {
    Boolean,
    Integer { min: i64, max: i64 },
    Real { min: f64, max: f64 },
    Enumerant { members: Vec<String> },
}

impl ValueKind {
    pub fn name(&self) -> &'static str {
        match self {
            ValueKind::Boolean => "boolean",
            ValueKind::Integer { .. } => "integer",
            ValueKind::Real { .. } => "real",
            ValueKind::Enumerant { .. } => "enumerant",
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ValueKind::Integer { .. } | ValueKind::Real { .. })
    }
}

/// A derived predicate or scope definition: `name := condition`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCondition {
    pub name: String,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub scope: Option<String>,
    /// Base clause: trigger C₀ and response O₀.
    pub base: Clause,
    /// Hedge clauses in textual (= priority) order; `hedges[i]` is clause `i + 1`.
    pub hedges: Vec<Clause>,
}

impl Rule {
    /// All clauses, base first.
    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        std::iter::once(&self.base).chain(self.hedges.iter())
    }

    pub fn clause(&self, index: usize) -> Option<&Clause> {
        if index == 0 {
            Some(&self.base)
        } else {
            self.hedges.get(index - 1)
        }
    }

    pub fn clause_count(&self) -> usize {
        1 + self.hedges.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub condition: Condition,
    pub obligation: Obligation,
}

/// Boolean expression over atoms of type `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "args", rename_all = "lowercase")]
pub enum BoolExpr<A> {
    Const(bool),
    Atom(A),
    Not(Box<BoolExpr<A>>),
    And(Vec<BoolExpr<A>>),
    Or(Vec<BoolExpr<A>>),
}

impl<A> BoolExpr<A> {
    /// Conjunction, splicing nested conjunctions and collapsing singletons.
    pub fn and(items: Vec<BoolExpr<A>>) -> BoolExpr<A> {
        Self::nary(items, true)
    }

    pub fn or(items: Vec<BoolExpr<A>>) -> BoolExpr<A> {
        Self::nary(items, false)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: BoolExpr<A>) -> BoolExpr<A> {
        BoolExpr::Not(Box::new(inner))
    }

    fn nary(items: Vec<BoolExpr<A>>, conj: bool) -> BoolExpr<A> {
        let mut flat = Vec::with_capacity(items.len());
        for item in items {
            match item {
                BoolExpr::And(inner) if conj => flat.extend(inner),
                BoolExpr::Or(inner) if !conj => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => BoolExpr::Const(conj),
            1 => flat.pop().expect("one item"),
            _ if conj => BoolExpr::And(flat),
            _ => BoolExpr::Or(flat),
        }
    }

    pub fn eval(&self, atom: &mut impl FnMut(&A) -> bool) -> bool {
        match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Atom(a) => atom(a),
            BoolExpr::Not(e) => !e.eval(atom),
            BoolExpr::And(es) => es.iter().all(|e| e.eval(atom)),
            BoolExpr::Or(es) => es.iter().any(|e| e.eval(atom)),
        }
    }

    /// Fallible evaluation; errors short-circuit.
    pub fn try_eval<E>(&self, atom: &mut impl FnMut(&A) -> Result<bool, E>) -> Result<bool, E> {
        Ok(match self {
            BoolExpr::Const(b) => *b,
            BoolExpr::Atom(a) => atom(a)?,
            BoolExpr::Not(e) => !e.try_eval(atom)?,
            BoolExpr::And(es) => {
                for e in es {
                    if !e.try_eval(atom)? {
                        return Ok(false);
                    }
                }
                true
            }
            BoolExpr::Or(es) => {
                for e in es {
                    if e.try_eval(atom)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            BoolExpr::Const(_) => {}
            BoolExpr::Atom(a) => out.push(a),
            BoolExpr::Not(e) => e.collect_atoms(out),
            BoolExpr::And(es) | BoolExpr::Or(es) => es.iter().for_each(|e| e.collect_atoms(out)),
        }
    }
}

pub type Condition = BoolExpr<Predicate>;

/// Boolean expression over `enforced(capability)` atoms.
pub type InvariantExpr = BoolExpr<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
}

impl RelOp {
    pub fn as_str(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    pub fn negate(self) -> RelOp {
        match self {
            RelOp::Eq => RelOp::Ne,
            RelOp::Ne => RelOp::Eq,
            RelOp::Lt => RelOp::Ge,
            RelOp::Ge => RelOp::Lt,
            RelOp::Le => RelOp::Gt,
            RelOp::Gt => RelOp::Le,
        }
    }

    pub fn is_equality(self) -> bool {
        matches!(self, RelOp::Eq | RelOp::Ne)
    }

    pub fn holds<T: PartialOrd>(self, lhs: T, rhs: T) -> bool {
        match self {
            RelOp::Eq => lhs == rhs,
            RelOp::Ne => lhs != rhs,
            RelOp::Lt => lhs < rhs,
            RelOp::Le => lhs <= rhs,
            RelOp::Gt => lhs > rhs,
            RelOp::Ge => lhs >= rhs,
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Predicate {
    /// Reference to a boolean monitored variable or derived predicate.
    Name(String),
    Compare {
        var: String,
        op: RelOp,
        value: Literal,
    },
}

impl Predicate {
    pub fn variable(&self) -> &str {
        match self {
            Predicate::Name(n) => n,
            Predicate::Compare { var, .. } => var,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Real(f64),
    /// Enumerant, written either bare or quoted.
    Symbol(String),
}

impl Literal {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Int(i) => Some(*i as f64),
            Literal::Real(r) => Some(*r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obligation {
    pub atoms: Vec<ObligationAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationAtom {
    pub capability: String,
    pub modifier: Modifier,
}

impl ObligationAtom {
    pub fn plain(capability: impl Into<String>) -> Self {
        ObligationAtom {
            capability: capability.into(),
            modifier: Modifier::Immediate,
        }
    }
}

/// Temporal decoration of an obligation atom. At most one per atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Modifier {
    Immediate,
    After(TimeDuration),
    Within {
        deadline: TimeDuration,
        fallback: String,
    },
}

impl Modifier {
    /// Same modifier with durations rewritten in canonical units.
    pub fn canonical(&self) -> Modifier {
        match self {
            Modifier::Immediate => Modifier::Immediate,
            Modifier::After(d) => Modifier::After(d.canonical()),
            Modifier::Within { deadline, fallback } => Modifier::Within {
                deadline: deadline.canonical(),
                fallback: fallback.clone(),
            },
        }
    }

    /// Total order used to list directives deterministically.
    pub fn sort_key(&self) -> (u8, u128, &str) {
        match self {
            Modifier::Immediate => (0, 0, ""),
            Modifier::After(d) => (1, d.as_nanos(), ""),
            Modifier::Within { deadline, fallback } => (2, deadline.as_nanos(), fallback),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TimeUnit {
    Nanosec,
    Millisec,
    Sec,
    Minute,
    Hour,
}

impl TimeUnit {
    pub const ALL: [TimeUnit; 5] = [
        TimeUnit::Nanosec,
        TimeUnit::Millisec,
        TimeUnit::Sec,
        TimeUnit::Minute,
        TimeUnit::Hour,
    ];

    pub fn nanos(self) -> u128 {
        match self {
            TimeUnit::Nanosec => 1,
            TimeUnit::Millisec => 1_000_000,
            TimeUnit::Sec => 1_000_000_000,
            TimeUnit::Minute => 60_000_000_000,
            TimeUnit::Hour => 3_600_000_000_000,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TimeUnit::Nanosec => "NANOSEC",
            TimeUnit::Millisec => "MILLISEC",
            TimeUnit::Sec => "SEC",
            TimeUnit::Minute => "MINUTE",
            TimeUnit::Hour => "HOUR",
        }
    }

    /// Accepts the canonical spelling and a trailing plural `S`, any case.
    pub fn from_word(word: &str) -> Option<TimeUnit> {
        let upper = word.to_ascii_uppercase();
        let singular = upper.strip_suffix('S').unwrap_or(&upper);
        TimeUnit::ALL
            .into_iter()
            .find(|u| u.as_str() == upper || u.as_str() == singular)
    }
}

/// Positive amount of a time unit. Equality is structural; compare
/// [`TimeDuration::as_nanos`] for semantic equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeDuration {
    pub amount: u64,
    pub unit: TimeUnit,
}

impl TimeDuration {
    pub fn new(amount: u64, unit: TimeUnit) -> Self {
        TimeDuration { amount, unit }
    }

    pub fn as_nanos(&self) -> u128 {
        self.amount as u128 * self.unit.nanos()
    }

    /// Nanoseconds as `u64`, saturating.
    pub fn as_nanos_u64(&self) -> u64 {
        u64::try_from(self.as_nanos()).unwrap_or(u64::MAX)
    }

    /// Rewrites the duration in the largest unit that divides it exactly,
    /// so that `60 SEC` and `1 MINUTE` share one representation.
    pub fn canonical(&self) -> TimeDuration {
        let ns = self.as_nanos();
        for unit in TimeUnit::ALL.into_iter().rev() {
            if ns.is_multiple_of(unit.nanos()) {
                if let Ok(amount) = u64::try_from(ns / unit.nanos()) {
                    return TimeDuration { amount, unit };
                }
            }
        }
        *self
    }
}

impl fmt::Display for TimeDuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.amount, self.unit.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObligationInvariant {
    pub name: String,
    pub expr: InvariantExpr,
}
