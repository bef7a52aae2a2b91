mod common;

use common::*;
use proptest::prelude::*;
use sleec_core::syntax::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn format_then_parse_is_identity(rs in ruleset()) {
        let text = format_ruleset(&rs);
        let back = parse_ruleset(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, rs);
    }

    #[test]
    fn parser_never_panics_on_bytes(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_ruleset(&text);
    }

    #[test]
    fn parser_never_panics_on_token_soup(words in prop::collection::vec(prop::sample::select(vec![
        "RULE", "R", "IF", "THEN", "UNLESS", "IN", "WHICH", "CASE", "AND", "OR", "NOT", "(", ")",
        "AFTER", "WITHIN", "OTHERWISE", "5", "MINUTE", "a", "x", "=", "<", "SCOPE", "VOCABULARY",
        "END", "MONITORED", ":", "BOOLEAN", "CAPABILITY", ",", ":=", "INVARIANT", "enforced",
    ]), 0..40)) {
        let _ = parse_ruleset(&words.join(" "));
    }
}

#[test]
fn scenario_fixture_round_trips() {
    let rs = scenario();
    assert_eq!(rs.rules.len(), 9);
    let again = parse_ruleset(&format_ruleset(&rs)).unwrap();
    assert_eq!(again, rs);
}

#[test]
fn scenario_is_well_formed() {
    let rs = scenario();
    let diags = validate(&rs);
    assert!(diags.iter().all(|d| !d.is_error()), "{diags:?}");
}

#[test]
fn or_binds_looser_than_and() {
    let src =
        "VOCABULARY MONITORED a: BOOLEAN MONITORED b: BOOLEAN MONITORED c: BOOLEAN CAPABILITY x END
RULE R IF a OR b AND c THEN x";
    let rs = parse_ruleset(src).unwrap();
    let n = |s: &str| BoolExpr::Atom(Predicate::Name(s.into()));
    assert_eq!(
        rs.rules[0].base.condition,
        BoolExpr::Or(vec![n("a"), BoolExpr::And(vec![n("b"), n("c")])])
    );
}

#[test]
fn undeclared_capability_is_reported() {
    let src = "VOCABULARY MONITORED a: BOOLEAN CAPABILITY x END
RULE R IF a THEN flyAway";
    let err = parse_ruleset(src).unwrap_err();
    assert_eq!(err.first().code, "UNDECLARED_CAPABILITY");
    assert_eq!((err.first().line, err.first().column), (2, 11));
}

#[test]
fn duplicate_rule_ids_are_reported() {
    let src = "VOCABULARY MONITORED a: BOOLEAN CAPABILITY x END
RULE S2 IF a THEN x
RULE S2 IF NOT a THEN x";
    let err = parse_ruleset(src).unwrap_err();
    assert_eq!(err.first().code, "DUPLICATE_RULE_ID");
    assert_eq!(err.first().line, 3);
}

#[test]
fn missing_condition_reports_position() {
    let err = parse_ruleset("RULE S2\nIF THEN x").unwrap_err();
    let d = err.first();
    assert_eq!((d.line, d.column), (2, 4));
    assert!(d.message.contains("expected condition"), "{}", d.message);
}

#[test]
fn keywords_ignore_case() {
    let src = "vocabulary monitored a: boolean capability x end
rule R if a then x unless not a in which case x";
    assert!(parse_ruleset(src).is_ok());
}
