//! Pretty-printer producing canonical `.sleec` text.
//!
//! Output reparses to a structurally equal ruleset.

use std::fmt::Write;

use super::ast::*;
use super::lexer::Keyword;

pub fn format_ruleset(rs: &Ruleset) -> String {
    let mut out = String::new();
    let v = &rs.vocabulary;
    let vocab_empty = v.monitored.is_empty()
        && v.capabilities.is_empty()
        && v.derived.is_empty()
        && v.scopes.is_empty();
    if !vocab_empty {
        out.push_str("VOCABULARY\n");
        for m in &v.monitored {
            let _ = writeln!(out, "  MONITORED {}: {}", m.name, format_kind(&m.kind));
        }
        if !v.capabilities.is_empty() {
            let _ = writeln!(out, "  CAPABILITY {}", v.capabilities.join(", "));
        }
        for d in &v.derived {
            let _ = writeln!(
                out,
                "  DERIVED {} := {}",
                d.name,
                format_condition(&d.condition)
            );
        }
        for s in &v.scopes {
            let _ = writeln!(
                out,
                "  SCOPE {} := {}",
                s.name,
                format_condition(&s.condition)
            );
        }
        out.push_str("END\n");
    }
    for inv in &rs.invariants {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "INVARIANT {}: {}",
            inv.name,
            format_expr(&inv.expr, &|cap: &String| format!("enforced({cap})"))
        );
    }
    for rule in &rs.rules {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&format_rule(rule));
    }
    out
}

pub fn format_rule(rule: &Rule) -> String {
    let mut out = String::new();
    if let Some(scope) = &rule.scope {
        let _ = writeln!(out, "SCOPE {scope}");
    }
    let _ = writeln!(out, "RULE {}", rule.id);
    let _ = writeln!(
        out,
        "IF {} THEN {}",
        format_condition(&rule.base.condition),
        format_obligation(&rule.base.obligation)
    );
    for h in &rule.hedges {
        let _ = writeln!(
            out,
            "UNLESS {} IN WHICH CASE {}",
            format_condition(&h.condition),
            format_obligation(&h.obligation)
        );
    }
    out
}

fn format_kind(kind: &ValueKind) -> String {
    match kind {
        ValueKind::Boolean => "BOOLEAN".into(),
        ValueKind::Integer { min, max } => format!("INTEGER RANGE {min}..{max}"),
        ValueKind::Real { min, max } => format!("REAL RANGE {min:?}..{max:?}"),
        ValueKind::Enumerant { members } => format!("ENUM {{{}}}", members.join(", ")),
    }
}

pub fn format_condition(c: &Condition) -> String {
    format_expr(c, &format_predicate)
}

fn format_predicate(p: &Predicate) -> String {
    match p {
        Predicate::Name(n) => n.clone(),
        Predicate::Compare { var, op, value } => format!("{var} {op} {}", format_literal(value)),
    }
}

fn format_literal(l: &Literal) -> String {
    match l {
        Literal::Bool(true) => "TRUE".into(),
        Literal::Bool(false) => "FALSE".into(),
        Literal::Int(i) => i.to_string(),
        Literal::Real(r) => format!("{r:?}"),
        Literal::Symbol(s) if is_bare_symbol(s) => s.clone(),
        Literal::Symbol(s) => {
            let mut q = String::from("\"");
            for c in s.chars() {
                match c {
                    '"' => q.push_str("\\\""),
                    '\\' => q.push_str("\\\\"),
                    '\n' => q.push_str("\\n"),
                    '\t' => q.push_str("\\t"),
                    c => q.push(c),
                }
            }
            q.push('"');
            q
        }
    }
}

fn is_bare_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    let starts_ok = chars
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    starts_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && Keyword::from_word(s).is_none()
        && !s.eq_ignore_ascii_case("TRUE")
        && !s.eq_ignore_ascii_case("FALSE")
}

/// Prints `e` with parentheses only where precedence requires them.
fn format_expr<A>(e: &BoolExpr<A>, atom: &dyn Fn(&A) -> String) -> String {
    match e {
        BoolExpr::Const(true) => "TRUE".into(),
        BoolExpr::Const(false) => "FALSE".into(),
        BoolExpr::Atom(a) => atom(a),
        BoolExpr::Not(inner) => match inner.as_ref() {
            BoolExpr::And(_) | BoolExpr::Or(_) => format!("NOT ({})", format_expr(inner, atom)),
            _ => format!("NOT {}", format_expr(inner, atom)),
        },
        BoolExpr::And(items) => items
            .iter()
            .map(|i| match i {
                BoolExpr::Or(_) | BoolExpr::And(_) => format!("({})", format_expr(i, atom)),
                _ => format_expr(i, atom),
            })
            .collect::<Vec<_>>()
            .join(" AND "),
        BoolExpr::Or(items) => items
            .iter()
            .map(|i| match i {
                BoolExpr::Or(_) => format!("({})", format_expr(i, atom)),
                _ => format_expr(i, atom),
            })
            .collect::<Vec<_>>()
            .join(" OR "),
    }
}

pub fn format_obligation(o: &Obligation) -> String {
    o.atoms
        .iter()
        .map(|a| match &a.modifier {
            Modifier::Immediate => a.capability.clone(),
            Modifier::After(d) => format!("{} AFTER {d}", a.capability),
            Modifier::Within { deadline, fallback } => {
                format!("{} WITHIN {deadline} OTHERWISE {fallback}", a.capability)
            }
        })
        .collect::<Vec<_>>()
        .join(" AND ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbols_quoted_when_needed() {
        assert_eq!(
            format_literal(&Literal::Symbol("MEALTIME".into())),
            "MEALTIME"
        );
        assert_eq!(format_literal(&Literal::Symbol("true".into())), "\"true\"");
        assert_eq!(format_literal(&Literal::Symbol("in".into())), "\"in\"");
        assert_eq!(format_literal(&Literal::Symbol("a b".into())), "\"a b\"");
    }

    #[test]
    fn minimal_parentheses() {
        let a = |s: &str| BoolExpr::Atom(Predicate::Name(s.into()));
        let e = BoolExpr::And(vec![
            BoolExpr::Or(vec![a("x"), a("y")]),
            BoolExpr::not(a("z")),
        ]);
        assert_eq!(format_condition(&e), "(x OR y) AND NOT z");
        let e = BoolExpr::Or(vec![BoolExpr::And(vec![a("x"), a("y")]), a("z")]);
        assert_eq!(format_condition(&e), "x AND y OR z");
    }
}
