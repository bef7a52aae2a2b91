use sleec_bench::cases::GroundTruthMismatch;
use sleec_bench::fixtures::{all_false_snapshot, scenario_config, SCENARIO};
use sleec_bench::synthetic::{GRID_CLAUSES, GRID_RULES};
use sleec_bench::*;
use sleec_core::analysis::check_well_formed;
use sleec_core::syntax::{BoolExpr, Modifier, TimeDuration, TimeUnit};
use sleec_core::{compile, format_ruleset, parse_ruleset, EthicsStatus};

#[test]
fn scenario_fixture_shape() {
    let rs = load_scenario();
    assert_eq!(rs.rules.len(), 9);
    let s5 = rs.rules.iter().find(|r| r.id == "S5").unwrap();
    let wake = &s5.hedges[0].obligation.atoms[0];
    assert_eq!(wake.capability, "wakeUpUser");
    assert_eq!(
        wake.modifier,
        Modifier::Within {
            deadline: TimeDuration::new(5, TimeUnit::Minute),
            fallback: "alertNurse".into(),
        }
    );
    let s3 = rs.rules.iter().find(|r| r.id == "S3").unwrap();
    assert!(matches!(s3.hedges[0].condition, BoolExpr::Or(_)));
    assert!(check_well_formed(&rs).is_empty());
    scenario_config("http://unused").validate_for(&rs).unwrap();
}

#[test]
fn all_false_snapshot_is_respectful() {
    let rs = load_scenario();
    let case = TestCase::from_snapshot(&rs, "quiet", all_false_snapshot());
    assert_eq!(case.expected_error, None);
    assert_eq!(case.expected.status, EthicsStatus::Respectful);
    assert!(case.expected.directives.is_empty());
}

#[test]
fn cases_are_deterministic_in_the_seed() {
    let rs = load_scenario();
    let a = generate_test_cases(&rs, 40, 7);
    assert_eq!(a, generate_test_cases(&rs, 40, 7));
    assert_ne!(a, generate_test_cases(&rs, 40, 8));
    assert_eq!(a[3].id, "case-0003");
    assert!(generate_test_cases(&rs, 0, 7).is_empty());
    verify_cases(&rs, &a).unwrap();
}

#[test]
fn tampered_expectation_is_caught() {
    let rs = load_scenario();
    let mut cases = generate_test_cases(&rs, 200, 1);
    let victim = cases
        .iter()
        .position(|c| !c.expected.directives.is_empty())
        .unwrap();
    cases[victim].expected.directives.clear();
    let err: GroundTruthMismatch = verify_cases(&rs, &cases).unwrap_err();
    assert_eq!(err.id, cases[victim].id);
    assert_eq!(err.code(), "GROUND_TRUTH_MISMATCH");
}

#[test]
fn cases_roundtrip_through_json() {
    let rs = load_scenario();
    let cases = generate_test_cases(&rs, 25, 3);
    let text = serde_json::to_string(&cases).unwrap();
    let back: Vec<TestCase> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, cases);
}

#[test]
fn largest_synthetic_shape() {
    let rs = generate_synthetic_ruleset(SyntheticSpec::new(60, 20, 0).unwrap());
    assert_eq!(rs.rules.len(), 60);
    assert_eq!(rs.vocabulary.monitored.len(), 1200);
    assert_eq!(rs.vocabulary.capabilities.len(), 1200);
    assert!(rs.rules.iter().all(|r| r.hedges.len() == 19));
}

#[test]
fn smallest_synthetic_shape() {
    let rs = generate_synthetic_ruleset(SyntheticSpec::new(1, 1, 0).unwrap());
    assert_eq!(rs.rules.len(), 1);
    assert!(rs.rules[0].hedges.is_empty());
    assert!(SyntheticSpec::new(0, 3, 0).is_err());
    assert!(SyntheticSpec::new(3, 0, 0).is_err());
}

#[test]
fn grid_models_print_parse_and_compile() {
    let grid = SyntheticSpec::grid(11);
    assert_eq!(grid.len(), GRID_RULES.len() * GRID_CLAUSES.len());
    assert_eq!(grid.len(), 110);
    for spec in grid {
        let rs = generate_synthetic_ruleset(spec);
        let text = format_ruleset(&rs);
        let reparsed = parse_ruleset(&text).unwrap_or_else(|e| panic!("{spec:?}: {e}"));
        assert_eq!(reparsed, rs);
        assert!(check_well_formed(&rs).is_empty(), "{spec:?}");
        compile(&rs).unwrap();
    }
}

#[test]
fn seed_changes_polarity_only() {
    let spec = |seed| SyntheticSpec::new(5, 4, seed).unwrap();
    let a = generate_synthetic_ruleset(spec(1));
    let b = generate_synthetic_ruleset(spec(2));
    assert_eq!(a.vocabulary, b.vocabulary);
    assert_ne!(a, b);
    assert_eq!(a, generate_synthetic_ruleset(spec(1)));
}

#[test]
fn scenario_source_is_embedded() {
    assert_eq!(parse_ruleset(SCENARIO).unwrap(), load_scenario());
}
