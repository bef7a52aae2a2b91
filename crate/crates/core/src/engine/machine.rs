use std::collections::HashMap;

use super::snapshot::bind;
use super::{
    ConditionSnapshot, ObligationDirective, ObligationSet, Provenance, SnapshotMode, StepError,
};
use crate::diagnostics::Diagnostic;
use crate::syntax::{
    validate, BoolExpr, Condition, Literal, Modifier, ObligationInvariant, Predicate, RelOp,
    Ruleset, ValueKind, NOOP,
};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("ruleset has {} error(s); first: {}", .diagnostics.iter().filter(|d| d.is_error()).count(), first_error(.diagnostics))]
pub struct CompileError {
    pub diagnostics: Vec<Diagnostic>,
}

impl CompileError {
    pub const CODE: &'static str = "COMPILE_ERROR";
}

fn first_error(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .find(|d| d.is_error())
        .map(|d| d.to_string())
        .unwrap_or_default()
}

/// Right-hand side of a compiled comparison, specialised to the variable kind.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Rhs {
    Bool(bool),
    Int(i64),
    Real(f64),
    Member(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Atom {
    slot: usize,
    op: RelOp,
    rhs: Rhs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum AtomKey {
    Bool(usize, RelOp, bool),
    Int(usize, RelOp, i64),
    Real(usize, RelOp, u64),
    Member(usize, RelOp, usize),
}

/// Postfix instruction.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(bool),
    Atom(u32),
    Derived(u32),
    Not,
    And(u32),
    Or(u32),
}

type Program = Vec<Op>;

#[derive(Debug, Clone)]
struct Template {
    capability: u32,
    modifier: Modifier,
}

#[derive(Debug, Clone)]
struct CompiledClause {
    condition: Program,
    obligation: Vec<Template>,
}

#[derive(Debug, Clone)]
struct CompiledRule {
    id: String,
    /// Clause 0 already contains the scope condition.
    clauses: Vec<CompiledClause>,
}

/// Executable form of a validated ruleset. Immutable; `step` takes `&self`.
#[derive(Debug, Clone)]
pub struct RuleMachine {
    ruleset: Ruleset,
    members: Vec<Vec<String>>,
    atoms: Vec<Atom>,
    derived: Vec<Program>,
    rules: Vec<CompiledRule>,
    capabilities: Vec<String>,
    invariants: Vec<ObligationInvariant>,
}

/// Compiles `rs`, failing with every diagnostic if any of them is an error.
pub fn compile(rs: &Ruleset) -> Result<RuleMachine, CompileError> {
    let diagnostics = validate(rs);
    if diagnostics.iter().any(Diagnostic::is_error) {
        return Err(CompileError { diagnostics });
    }
    Ok(Compiler::new(rs).finish())
}

struct Compiler<'a> {
    rs: &'a Ruleset,
    slots: HashMap<&'a str, usize>,
    derived_ids: HashMap<&'a str, u32>,
    atoms: Vec<Atom>,
    atom_ids: HashMap<AtomKey, u32>,
    cap_ids: HashMap<String, u32>,
    capabilities: Vec<String>,
}

impl<'a> Compiler<'a> {
    fn new(rs: &'a Ruleset) -> Self {
        let voc = &rs.vocabulary;
        Compiler {
            rs,
            slots: voc
                .monitored
                .iter()
                .enumerate()
                .map(|(i, m)| (m.name.as_str(), i))
                .collect(),
            derived_ids: voc
                .derived
                .iter()
                .enumerate()
                .map(|(i, d)| (d.name.as_str(), i as u32))
                .collect(),
            atoms: Vec::new(),
            atom_ids: HashMap::new(),
            cap_ids: HashMap::new(),
            capabilities: Vec::new(),
        }
    }

    fn finish(mut self) -> RuleMachine {
        let rs = self.rs;
        for cap in &rs.vocabulary.capabilities {
            self.capability(cap);
        }
        let derived = rs
            .vocabulary
            .derived
            .iter()
            .map(|d| self.program(&d.condition))
            .collect();
        let rules = rs
            .rules
            .iter()
            .map(|rule| {
                let clauses = rule
                    .clauses()
                    .enumerate()
                    .map(|(i, clause)| {
                        let condition = match (&rule.scope, i) {
                            (Some(scope), 0) => {
                                let scope = rs
                                    .vocabulary
                                    .scope(scope)
                                    .expect("validated scope")
                                    .condition
                                    .clone();
                                BoolExpr::and(vec![scope, clause.condition.clone()])
                            }
                            _ => clause.condition.clone(),
                        };
                        let obligation = clause
                            .obligation
                            .atoms
                            .iter()
                            .filter(|a| a.capability != NOOP)
                            .map(|a| Template {
                                capability: self.capability(&a.capability),
                                modifier: a.modifier.canonical(),
                            })
                            .collect();
                        CompiledClause {
                            condition: self.program(&condition),
                            obligation,
                        }
                    })
                    .collect();
                CompiledRule {
                    id: rule.id.clone(),
                    clauses,
                }
            })
            .collect();
        let members = rs
            .vocabulary
            .monitored
            .iter()
            .map(|m| match &m.kind {
                ValueKind::Enumerant { members } => members.clone(),
                _ => Vec::new(),
            })
            .collect();
        RuleMachine {
            ruleset: rs.clone(),
            members,
            atoms: self.atoms,
            derived,
            rules,
            capabilities: self.capabilities,
            invariants: rs.invariants.clone(),
        }
    }

    fn capability(&mut self, name: &str) -> u32 {
        if let Some(id) = self.cap_ids.get(name) {
            return *id;
        }
        let id = self.capabilities.len() as u32;
        self.capabilities.push(name.to_string());
        self.cap_ids.insert(name.to_string(), id);
        id
    }

    fn program(&mut self, c: &Condition) -> Program {
        let mut out = Vec::new();
        self.emit(c, &mut out);
        out
    }

    fn emit(&mut self, c: &Condition, out: &mut Program) {
        match c {
            BoolExpr::Const(b) => out.push(Op::Const(*b)),
            BoolExpr::Atom(p) => out.push(self.predicate(p)),
            BoolExpr::Not(inner) => {
                self.emit(inner, out);
                out.push(Op::Not);
            }
            BoolExpr::And(items) | BoolExpr::Or(items) => {
                for item in items {
                    self.emit(item, out);
                }
                let n = items.len() as u32;
                out.push(if matches!(c, BoolExpr::And(_)) {
                    Op::And(n)
                } else {
                    Op::Or(n)
                });
            }
        }
    }

    fn predicate(&mut self, p: &Predicate) -> Op {
        let voc = &self.rs.vocabulary;
        let (var, op, lit) = match p {
            Predicate::Name(name) => {
                if let Some(id) = self.derived_ids.get(name.as_str()) {
                    return Op::Derived(*id);
                }
                (name.as_str(), RelOp::Eq, Literal::Bool(true))
            }
            Predicate::Compare { var, op, value } => (var.as_str(), *op, value.clone()),
        };
        let slot = self.slots[var];
        let kind = &voc.monitored[slot].kind;
        let (key, rhs) = match (kind, lit) {
            (ValueKind::Boolean, Literal::Bool(b)) => (AtomKey::Bool(slot, op, b), Rhs::Bool(b)),
            (ValueKind::Integer { .. }, Literal::Int(i)) => {
                (AtomKey::Int(slot, op, i), Rhs::Int(i))
            }
            (ValueKind::Real { .. }, lit) => {
                let r = lit.as_f64().expect("validated numeric literal");
                (AtomKey::Real(slot, op, r.to_bits()), Rhs::Real(r))
            }
            (ValueKind::Enumerant { members }, Literal::Symbol(s)) => {
                let m = members
                    .iter()
                    .position(|x| *x == s)
                    .expect("validated member");
                (AtomKey::Member(slot, op, m), Rhs::Member(m))
            }
            (kind, lit) => unreachable!("validated predicate: {kind:?} vs {lit:?}"),
        };
        let next = self.atoms.len() as u32;
        let id = *self.atom_ids.entry(key).or_insert(next);
        if id == next {
            self.atoms.push(Atom { slot, op, rhs });
        }
        Op::Atom(id)
    }
}

fn run(program: &[Op], atoms: &[bool], derived: &[bool], stack: &mut Vec<bool>) -> bool {
    stack.clear();
    for op in program {
        match *op {
            Op::Const(b) => stack.push(b),
            Op::Atom(i) => stack.push(atoms[i as usize]),
            Op::Derived(i) => stack.push(derived[i as usize]),
            Op::Not => {
                let top = stack.last_mut().expect("operand");
                *top = !*top;
            }
            Op::And(n) | Op::Or(n) => {
                let at = stack.len() - n as usize;
                let v = if matches!(op, Op::And(_)) {
                    stack[at..].iter().all(|b| *b)
                } else {
                    stack[at..].iter().any(|b| *b)
                };
                stack.truncate(at);
                stack.push(v);
            }
        }
    }
    stack.pop().expect("program result")
}

/// Per-step truth values of atoms and derived predicates.
struct Frame {
    atoms: Vec<bool>,
    derived: Vec<bool>,
    stack: Vec<bool>,
}

impl RuleMachine {
    pub fn ruleset(&self) -> &Ruleset {
        &self.ruleset
    }

    pub fn rule_ids(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(|r| r.id.as_str())
    }

    pub fn capabilities(&self) -> &[String] {
        &self.capabilities
    }

    /// Number of distinct atomic comparisons after deduplication.
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    fn frame(&self, snap: &ConditionSnapshot, mode: SnapshotMode) -> Result<Frame, StepError> {
        let env = bind(&self.ruleset.vocabulary, snap, mode)?;
        let atoms = self
            .atoms
            .iter()
            .map(|a| self.atom_holds(a, &env[a.slot]))
            .collect::<Vec<_>>();
        let mut stack = Vec::new();
        let derived = self
            .derived
            .iter()
            .map(|p| run(p, &atoms, &[], &mut stack))
            .collect();
        Ok(Frame {
            atoms,
            derived,
            stack,
        })
    }

    fn atom_holds(&self, atom: &Atom, value: &Value) -> bool {
        match (atom.rhs, value) {
            (Rhs::Bool(b), Value::Bool(v)) => atom.op.holds(*v, b),
            (Rhs::Int(i), Value::Int(v)) => atom.op.holds(*v, i),
            (Rhs::Real(r), Value::Real(v)) => atom.op.holds(*v, r),
            (Rhs::Member(m), Value::Enum(s)) => {
                let idx = self.members[atom.slot].iter().position(|x| x == s);
                atom.op.holds(idx, Some(m))
            }
            _ => unreachable!("bound snapshot matches declared kinds"),
        }
    }

    /// Nested guards: clause i fires when C0..Ci hold and C(i+1) does not;
    /// the last clause fires when all conditions hold.
    fn select(&self, rule: &CompiledRule, frame: &mut Frame) -> Option<usize> {
        let n = rule.clauses.len();
        let mut memo: Vec<Option<bool>> = vec![None; n];
        let mut holds = |j: usize, frame: &mut Frame| -> bool {
            *memo[j].get_or_insert_with(|| {
                run(
                    &rule.clauses[j].condition,
                    &frame.atoms,
                    &frame.derived,
                    &mut frame.stack,
                )
            })
        };
        for i in 0..n {
            let prefix = (0..=i).all(|j| holds(j, frame));
            if !prefix {
                continue;
            }
            if i + 1 == n || !holds(i + 1, frame) {
                return Some(i);
            }
        }
        None
    }

    /// Index of the active clause of rule `rule` (by position), if any.
    pub fn active_clause_index(
        &self,
        rule: usize,
        snap: &ConditionSnapshot,
    ) -> Result<Option<usize>, StepError> {
        let mut frame = self.frame(snap, SnapshotMode::Strict)?;
        Ok(self.select(&self.rules[rule], &mut frame))
    }

    /// Active clause of every rule, in rule order.
    pub fn active_clauses(
        &self,
        snap: &ConditionSnapshot,
        mode: SnapshotMode,
    ) -> Result<Vec<Option<usize>>, StepError> {
        let mut frame = self.frame(snap, mode)?;
        Ok(self
            .rules
            .iter()
            .map(|r| self.select(r, &mut frame))
            .collect())
    }

    pub fn step(&self, snap: &ConditionSnapshot) -> Result<ObligationSet, StepError> {
        self.step_with(snap, SnapshotMode::Strict)
    }

    pub fn step_with(
        &self,
        snap: &ConditionSnapshot,
        mode: SnapshotMode,
    ) -> Result<ObligationSet, StepError> {
        let mut frame = self.frame(snap, mode)?;
        // Outputs start empty every step; rules only ever add to them.
        let mut emitted: Vec<(u32, &Modifier, usize, usize)> = Vec::new();
        for (ri, rule) in self.rules.iter().enumerate() {
            if let Some(ci) = self.select(rule, &mut frame) {
                for t in &rule.clauses[ci].obligation {
                    emitted.push((t.capability, &t.modifier, ri, ci));
                }
            }
        }
        let name = |c: u32| self.capabilities[c as usize].as_str();
        emitted.sort_by(|a, b| {
            name(a.0)
                .cmp(name(b.0))
                .then_with(|| a.1.sort_key().cmp(&b.1.sort_key()))
        });

        let mut directives: Vec<ObligationDirective> = Vec::new();
        let mut i = 0;
        while i < emitted.len() {
            let cap = emitted[i].0;
            let mut j = i;
            while j < emitted.len() && emitted[j].0 == cap {
                j += 1;
            }
            let group = &emitted[i..j];
            let prov = |g: &[(u32, &Modifier, usize, usize)]| {
                let mut p: Vec<Provenance> = g
                    .iter()
                    .map(|e| Provenance {
                        rule: self.rules[e.2].id.clone(),
                        clause: e.3,
                    })
                    .collect();
                p.sort();
                p.dedup();
                p
            };
            if group.iter().any(|e| e.1 != group[0].1) {
                let mut modifiers: Vec<Modifier> = Vec::new();
                for e in group {
                    if modifiers.last() != Some(e.1) {
                        modifiers.push(e.1.clone());
                    }
                }
                return Err(StepError::ConflictingConstraints {
                    capability: name(cap).to_string(),
                    modifiers,
                    provenance: prov(group),
                });
            }
            directives.push(ObligationDirective {
                capability: name(cap).to_string(),
                modifier: group[0].1.clone(),
                provenance: prov(group),
            });
            i = j;
        }

        let set = ObligationSet::from_directives(directives);
        for inv in &self.invariants {
            if !inv.expr.eval(&mut |cap: &String| set.contains(cap)) {
                let mut witnesses: Vec<ObligationDirective> = Vec::new();
                for cap in inv.expr.atoms() {
                    if let Some(d) = set.get(cap) {
                        if !witnesses.contains(d) {
                            witnesses.push(d.clone());
                        }
                    }
                }
                return Err(StepError::InvariantViolation {
                    invariant: inv.name.clone(),
                    witnesses,
                });
            }
        }
        Ok(set)
    }
}
