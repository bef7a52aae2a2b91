//! Name resolution and type checking.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use crate::diagnostics::{codes, Diagnostic, Location};

const RESERVED: [&str; 4] = [NOOP, "true", "false", "enforced"];

/// Checks that every name resolves and every comparison is well typed.
/// Errors make a ruleset unusable; warnings flag unused vocabulary.
pub fn validate(rs: &Ruleset) -> Vec<Diagnostic> {
    let mut v = Validator {
        rs,
        diags: Vec::new(),
        used: BTreeSet::new(),
    };
    v.vocabulary();
    v.rules();
    v.invariants();
    v.unused();
    v.diags
}

struct Validator<'a> {
    rs: &'a Ruleset,
    diags: Vec<Diagnostic>,
    used: BTreeSet<String>,
}

fn vocab(name: &str) -> Location {
    Location::Vocabulary {
        name: name.to_string(),
    }
}

impl Validator<'_> {
    fn err(&mut self, code: &str, loc: Location, msg: String) {
        self.diags.push(Diagnostic::error(code, loc, msg));
    }

    fn vocabulary(&mut self) {
        let voc = &self.rs.vocabulary;
        let mut seen: HashMap<&str, ()> = HashMap::new();
        let names = voc
            .monitored
            .iter()
            .map(|m| m.name.as_str())
            .chain(voc.capabilities.iter().map(String::as_str))
            .chain(voc.derived.iter().map(|d| d.name.as_str()))
            .chain(voc.scopes.iter().map(|s| s.name.as_str()));
        let mut dups = Vec::new();
        let mut reserved = Vec::new();
        for name in names {
            if RESERVED.iter().any(|r| r.eq_ignore_ascii_case(name)) {
                reserved.push(name);
            } else if seen.insert(name, ()).is_some() {
                dups.push(name);
            }
        }
        for name in dups {
            self.err(
                codes::DUPLICATE_NAME,
                vocab(name),
                format!("`{name}` is declared more than once"),
            );
        }
        for name in reserved {
            self.err(
                codes::RESERVED_NAME,
                vocab(name),
                format!("`{name}` is a reserved name"),
            );
        }

        for m in &voc.monitored {
            match &m.kind {
                ValueKind::Integer { min, max } if min > max => self.err(
                    codes::INVALID_RANGE,
                    vocab(&m.name),
                    format!("range {min}..{max} of `{}` is empty", m.name),
                ),
                ValueKind::Real { min, max }
                    if min > max || !min.is_finite() || !max.is_finite() =>
                {
                    self.err(
                        codes::INVALID_RANGE,
                        vocab(&m.name),
                        format!("range {min:?}..{max:?} of `{}` is empty", m.name),
                    )
                }
                ValueKind::Enumerant { members } => {
                    if members.is_empty() {
                        self.err(
                            codes::EMPTY_DOMAIN,
                            vocab(&m.name),
                            format!("enumeration `{}` has no members", m.name),
                        );
                    }
                    let distinct: BTreeSet<&String> = members.iter().collect();
                    if distinct.len() != members.len() {
                        self.err(
                            codes::DUPLICATE_NAME,
                            vocab(&m.name),
                            format!("enumeration `{}` lists a member twice", m.name),
                        );
                    }
                }
                _ => {}
            }
        }

        for d in &voc.derived {
            self.condition(&d.condition, &vocab(&d.name), false);
        }
        for s in &voc.scopes {
            self.condition(&s.condition, &vocab(&s.name), true);
        }
    }

    fn rules(&mut self) {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        for (index, rule) in self.rs.rules.iter().enumerate() {
            let here = |clause| Location::Rule {
                rule: rule.id.clone(),
                index,
                clause,
            };
            if ids.insert(rule.id.as_str(), index).is_some() {
                self.err(
                    codes::DUPLICATE_RULE_ID,
                    here(None),
                    format!("rule id `{}` is used more than once", rule.id),
                );
            }
            if let Some(scope) = &rule.scope {
                if self.rs.vocabulary.scope(scope).is_some() {
                    self.used.insert(scope.clone());
                } else {
                    self.err(
                        codes::UNDECLARED_SCOPE,
                        here(None),
                        format!("scope `{scope}` is not declared"),
                    );
                }
            }
            for (ci, clause) in rule.clauses().enumerate() {
                let loc = here(Some(ci));
                if ci > 0 && clause.condition == BoolExpr::Const(false) {
                    self.err(
                        codes::FALSE_HEDGE,
                        loc.clone(),
                        "hedge condition is the literal FALSE".into(),
                    );
                }
                self.condition(&clause.condition, &loc, true);
                self.obligation(&clause.obligation, &loc);
            }
        }
    }

    fn obligation(&mut self, o: &Obligation, loc: &Location) {
        if o.atoms.is_empty() {
            self.err(
                codes::EMPTY_OBLIGATION,
                loc.clone(),
                "obligation has no atoms".into(),
            );
        }
        for atom in &o.atoms {
            self.capability(&atom.capability, loc);
            match &atom.modifier {
                Modifier::Immediate => {}
                Modifier::After(d) => self.duration(d, loc),
                Modifier::Within { deadline, fallback } => {
                    self.duration(deadline, loc);
                    self.capability(fallback, loc);
                }
            }
        }
    }

    fn capability(&mut self, cap: &str, loc: &Location) {
        if self.rs.vocabulary.has_capability(cap) {
            self.used.insert(cap.to_string());
        } else {
            self.err(
                codes::UNDECLARED_CAPABILITY,
                loc.clone(),
                format!("capability `{cap}` is not declared"),
            );
        }
    }

    fn duration(&mut self, d: &TimeDuration, loc: &Location) {
        if d.amount == 0 || u64::try_from(d.as_nanos()).is_err() {
            self.err(
                codes::INVALID_DURATION,
                loc.clone(),
                format!("duration {d} must be positive and fit in 64-bit nanoseconds"),
            );
        }
    }

    /// `allow_derived` is false inside derived/scope definitions only for
    /// derived predicates (they may reference monitored variables only).
    fn condition(&mut self, c: &Condition, loc: &Location, allow_derived: bool) {
        for p in c.atoms() {
            self.predicate(p, loc, allow_derived);
        }
    }

    fn predicate(&mut self, p: &Predicate, loc: &Location, allow_derived: bool) {
        let voc = &self.rs.vocabulary;
        match p {
            Predicate::Name(name) => {
                if let Some(m) = voc.monitored(name) {
                    self.used.insert(name.clone());
                    if m.kind != ValueKind::Boolean {
                        self.err(
                            codes::TYPE_MISMATCH,
                            loc.clone(),
                            format!(
                                "`{name}` is {} and cannot be used as a condition on its own",
                                m.kind.name()
                            ),
                        );
                    }
                } else if voc.derived(name).is_some() {
                    self.used.insert(name.clone());
                    if !allow_derived {
                        self.err(
                            codes::DERIVED_REFERENCE,
                            loc.clone(),
                            format!(
                                "derived predicate `{name}` may only reference monitored variables"
                            ),
                        );
                    }
                } else {
                    self.err(
                        codes::UNDECLARED_VARIABLE,
                        loc.clone(),
                        format!("`{name}` is not a declared variable or derived predicate"),
                    );
                }
            }
            Predicate::Compare { var, op, value } => {
                let Some(m) = voc.monitored(var) else {
                    let msg = if voc.derived(var).is_some() {
                        format!("derived predicate `{var}` cannot be compared")
                    } else {
                        format!("`{var}` is not a declared variable")
                    };
                    let code = if voc.derived(var).is_some() {
                        codes::TYPE_MISMATCH
                    } else {
                        codes::UNDECLARED_VARIABLE
                    };
                    self.err(code, loc.clone(), msg);
                    return;
                };
                self.used.insert(var.clone());
                let ok = match (&m.kind, value) {
                    (ValueKind::Boolean, Literal::Bool(_)) => op.is_equality(),
                    (ValueKind::Integer { .. }, Literal::Int(_)) => true,
                    (ValueKind::Real { .. }, Literal::Int(_) | Literal::Real(_)) => true,
                    (ValueKind::Enumerant { members }, Literal::Symbol(s)) => {
                        op.is_equality() && members.contains(s)
                    }
                    _ => false,
                };
                if !ok {
                    self.err(
                        codes::TYPE_MISMATCH,
                        loc.clone(),
                        format!(
                            "cannot compare {} `{var}` with `{op}` against {}",
                            m.kind.name(),
                            describe_literal(value)
                        ),
                    );
                }
            }
        }
    }

    fn invariants(&mut self) {
        for inv in &self.rs.invariants {
            for cap in inv.expr.atoms() {
                if self.rs.vocabulary.has_capability(cap) {
                    self.used.insert(cap.clone());
                } else {
                    self.err(
                        codes::UNDECLARED_CAPABILITY,
                        Location::Invariant {
                            name: inv.name.clone(),
                        },
                        format!("capability `{cap}` is not declared"),
                    );
                }
            }
        }
        let mut seen = BTreeSet::new();
        for inv in &self.rs.invariants {
            if !seen.insert(inv.name.as_str()) {
                self.err(
                    codes::DUPLICATE_NAME,
                    Location::Invariant {
                        name: inv.name.clone(),
                    },
                    format!("invariant `{}` is declared more than once", inv.name),
                );
            }
        }
    }

    fn unused(&mut self) {
        let voc = &self.rs.vocabulary;
        let mut warnings = Vec::new();
        for m in &voc.monitored {
            if !self.used.contains(&m.name) {
                warnings.push((codes::UNUSED_MONITORED, &m.name, "monitored variable"));
            }
        }
        for c in &voc.capabilities {
            if !self.used.contains(c) {
                warnings.push((codes::UNUSED_CAPABILITY, c, "capability"));
            }
        }
        for d in &voc.derived {
            if !self.used.contains(&d.name) {
                warnings.push((codes::UNUSED_DERIVED, &d.name, "derived predicate"));
            }
        }
        for s in &voc.scopes {
            if !self.used.contains(&s.name) {
                warnings.push((codes::UNUSED_SCOPE, &s.name, "scope"));
            }
        }
        for (code, name, what) in warnings {
            self.diags.push(Diagnostic::warning(
                code,
                vocab(name),
                format!("{what} `{name}` is never used"),
            ));
        }
    }
}

fn describe_literal(l: &Literal) -> String {
    match l {
        Literal::Bool(b) => format!("boolean {b}"),
        Literal::Int(i) => format!("integer {i}"),
        Literal::Real(r) => format!("real {r:?}"),
        Literal::Symbol(s) => format!("enumerant {s}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse_unchecked;

    fn codes_of(src: &str) -> Vec<String> {
        let (rs, _) = parse_unchecked(src).unwrap();
        validate(&rs).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn clean_ruleset_has_no_diagnostics() {
        let src = "VOCABULARY
  MONITORED t: INTEGER RANGE 10..40
  MONITORED ready: BOOLEAN
  CAPABILITY go
  DERIVED warm := t >= 26
END
RULE R IF ready AND warm THEN go";
        assert!(codes_of(src).is_empty(), "{:?}", codes_of(src));
    }

    #[test]
    fn type_errors() {
        let src = "VOCABULARY
  MONITORED t: INTEGER RANGE 10..40
  MONITORED day: ENUM {A, B}
  MONITORED ready: BOOLEAN
  CAPABILITY go
END
RULE R IF t AND day < A AND ready > TRUE AND day = C AND t = 2.5 THEN go";
        let c = codes_of(src);
        assert_eq!(
            c.iter().filter(|c| *c == "TYPE_MISMATCH").count(),
            5,
            "{c:?}"
        );
    }

    #[test]
    fn derived_may_not_reference_derived() {
        let src = "VOCABULARY
  MONITORED t: INTEGER RANGE 10..40
  CAPABILITY go
  DERIVED warm := t >= 26
  DERIVED hot := warm
END
RULE R IF hot THEN go";
        assert!(codes_of(src).contains(&"DERIVED_REFERENCE".to_string()));
    }

    #[test]
    fn unused_and_reserved() {
        let src = "VOCABULARY
  MONITORED a: BOOLEAN
  MONITORED b: BOOLEAN
  CAPABILITY go, stay, noop
END
RULE R IF a THEN go UNLESS FALSE IN WHICH CASE noop";
        let c = codes_of(src);
        assert!(c.contains(&"UNUSED_MONITORED".to_string()));
        assert!(c.contains(&"UNUSED_CAPABILITY".to_string()));
        assert!(c.contains(&"RESERVED_NAME".to_string()));
        assert!(c.contains(&"FALSE_HEDGE".to_string()));
    }
}
