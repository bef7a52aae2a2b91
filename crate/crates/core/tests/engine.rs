mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use sleec_core::engine::oracle;
use sleec_core::syntax::*;
use sleec_core::*;

fn scenario_snapshot(time: &str, trues: &[&str], temp: i64) -> ConditionSnapshot {
    let rs = scenario();
    let mut snap = ConditionSnapshot::all_false(&rs.vocabulary);
    snap.set("timeOfDay", time);
    snap.set("roomTemperature", temp);
    for t in trues {
        snap.set(*t, true);
    }
    snap
}

fn caps(set: &ObligationSet) -> Vec<&str> {
    set.capabilities()
}

#[test]
fn s2_physical_issues_notifies_and_alerts() {
    let m = compile(&scenario()).unwrap();
    let snap = scenario_snapshot(
        "TRAININGTIME",
        &[
            "fewerExerciseRepetitions",
            "userEncouraged",
            "userPhysicalIssues",
        ],
        20,
    );
    let out = m.step(&snap).unwrap();
    assert_eq!(caps(&out), vec!["alertNurse", "notifySessionEnd"]);
    assert_eq!(out.status, EthicsStatus::Critical);
    assert_eq!(
        out.get("alertNurse").unwrap().provenance,
        vec![Provenance {
            rule: "S2".into(),
            clause: 3
        }]
    );
}

#[test]
fn s2_base_clause_waits_one_minute() {
    let m = compile(&scenario()).unwrap();
    let out = m.step(&scenario_snapshot("TRAININGTIME", &[], 20)).unwrap();
    assert_eq!(out.directives.len(), 1);
    let d = &out.directives[0];
    assert_eq!(d.capability, "showNextExercise");
    assert_eq!(
        d.modifier,
        Modifier::After(TimeDuration::new(1, TimeUnit::Minute))
    );
}

#[test]
fn s2_fewer_repetitions_selects_first_hedge() {
    let rs = scenario();
    let m = compile(&rs).unwrap();
    let s2 = rs.rules.iter().position(|r| r.id == "S2").unwrap();
    let snap = scenario_snapshot("TRAININGTIME", &["fewerExerciseRepetitions"], 20);
    assert_eq!(m.active_clause_index(s2, &snap).unwrap(), Some(1));
    assert_eq!(caps(&m.step(&snap).unwrap()), vec!["encourage"]);

    let all = scenario_snapshot(
        "TRAININGTIME",
        &["fewerExerciseRepetitions", "userEncouraged"],
        20,
    );
    assert_eq!(m.active_clause_index(s2, &all).unwrap(), Some(2));

    let out_of_scope = scenario_snapshot("MEALTIME", &["fewerExerciseRepetitions"], 20);
    assert_eq!(m.active_clause_index(s2, &out_of_scope).unwrap(), None);
}

#[test]
fn too_warm_is_derived_from_temperature() {
    let m = compile(&scenario()).unwrap();
    let trues = ["userReady", "userCaresAboutPrivacy", "permissionAsked"];
    let warm = m
        .step(&scenario_snapshot("STARTTRAININGTIME", &trues, 27))
        .unwrap();
    assert!(warm.contains("askPermissionDoorOpen"));
    let cool = m
        .step(&scenario_snapshot("STARTTRAININGTIME", &trues, 25))
        .unwrap();
    assert!(!cool.contains("askPermissionDoorOpen"));
    assert!(cool.contains("closeDoor"));
}

#[test]
fn all_false_snapshot_is_respectful() {
    let rs = scenario();
    let m = compile(&rs).unwrap();
    let snap: ConditionSnapshot =
        serde_json::from_str(&fixture("all_false.json")).expect("fixture json");
    let out = m.step(&snap).unwrap();
    assert_eq!(
        serde_json::to_string(&out).unwrap(),
        r#"{"directives":[],"status":"respectful"}"#
    );
}

#[test]
fn missing_binding_names_the_variable() {
    let rs = scenario();
    let m = compile(&rs).unwrap();
    let mut snap = ConditionSnapshot::all_false(&rs.vocabulary);
    snap.values.remove("userSleeping");
    let err = m.step(&snap).unwrap_err();
    assert_eq!(
        err,
        StepError::MissingBinding {
            variable: "userSleeping".into()
        }
    );
    assert_eq!(err.code(), "MISSING_BINDING");
    assert!(m.step_with(&snap, SnapshotMode::Lenient).is_ok());
    snap.values.remove("timeOfDay");
    assert!(m.step_with(&snap, SnapshotMode::Lenient).is_err());
}

#[test]
fn snapshot_type_errors() {
    let rs = scenario();
    let m = compile(&rs).unwrap();
    let base = ConditionSnapshot::all_false(&rs.vocabulary);
    let bad = base.clone().with("userReady", 1i64);
    assert_eq!(m.step(&bad).unwrap_err().code(), "TYPE_MISMATCH");
    let bad = base.clone().with("timeOfDay", "NOON");
    assert_eq!(m.step(&bad).unwrap_err().code(), "TYPE_MISMATCH");
    let bad = base.clone().with("flying", true);
    assert_eq!(m.step(&bad).unwrap_err().code(), "UNKNOWN_VARIABLE");
    // derived names may be echoed back and are ignored
    assert!(m.step(&base.with("tooWarm", true)).is_ok());
}

#[test]
fn compile_rejects_invalid_rulesets() {
    let mut rs = scenario();
    rs.rules[0]
        .base
        .obligation
        .atoms
        .push(ObligationAtom::plain("flyAway"));
    let err = compile(&rs).unwrap_err();
    assert!(err
        .diagnostics
        .iter()
        .any(|d| d.code == "UNDECLARED_CAPABILITY"));
}

#[test]
fn conflicting_fixture_violates_invariant() {
    let rs = parse_ruleset(&fixture("conflict.sleec")).unwrap();
    let m = compile(&rs).unwrap();
    let snap = ConditionSnapshot::new().with("atom", true);
    let err = m.step(&snap).unwrap_err();
    match &err {
        StepError::InvariantViolation {
            invariant,
            witnesses,
        } => {
            assert_eq!(invariant, "inv_1");
            let names: Vec<_> = witnesses.iter().map(|w| w.capability.as_str()).collect();
            assert_eq!(names, vec!["openDoor", "closeDoor"]);
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(oracle_step(&rs, &snap).unwrap_err(), err);
    let json = serde_json::to_value(&err).unwrap();
    assert_eq!(json["error"], "INVARIANT_VIOLATION");
}

#[test]
fn differing_modifiers_conflict() {
    let src = "VOCABULARY MONITORED a: BOOLEAN CAPABILITY x END
RULE R1 IF a THEN x AFTER 1 MINUTE
RULE R2 IF a THEN x AFTER 60 SEC
RULE R3 IF a THEN x";
    let rs = parse_ruleset(src).unwrap();
    let m = compile(&rs).unwrap();
    let snap = ConditionSnapshot::new().with("a", true);
    let err = m.step(&snap).unwrap_err();
    assert_eq!(err.code(), "CONFLICTING_CONSTRAINTS");
    assert_eq!(oracle_step(&rs, &snap).unwrap_err(), err);

    // 60 SEC and 1 MINUTE merge
    let rs = parse_ruleset(&src[..src.rfind("RULE R3").unwrap()]).unwrap();
    let out = compile(&rs).unwrap().step(&snap).unwrap();
    assert_eq!(out.directives.len(), 1);
    assert_eq!(out.directives[0].provenance.len(), 2);
}

#[test]
fn empty_ruleset_is_respectful() {
    let rs = Ruleset::default();
    let snap = ConditionSnapshot::new();
    assert_eq!(oracle_step(&rs, &snap).unwrap(), ObligationSet::empty());
    assert_eq!(
        compile(&rs).unwrap().step(&snap).unwrap(),
        ObligationSet::empty()
    );
}

/// Literal nested conditional over one rule, written out independently.
fn nested_if(rs: &Ruleset, rule: &Rule, snap: &ConditionSnapshot) -> Option<usize> {
    let env: BTreeMap<String, Value> = snap.values.clone();
    let holds = |c: &Condition| oracle::eval_condition(rs, &env, c);
    let scope_ok = rule
        .scope
        .as_ref()
        .is_none_or(|s| holds(&rs.vocabulary.scope(s).unwrap().condition));
    let c: Vec<bool> = rule.clauses().map(|cl| holds(&cl.condition)).collect();
    let c0 = scope_ok && c[0];
    if !c0 {
        return None;
    }
    let n = c.len() - 1;
    for i in 0..n {
        if c[1..=i].iter().all(|x| *x) && !c[i + 1] {
            return Some(i);
        }
    }
    Some(n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn machine_agrees_with_oracle(rs in ruleset(), snaps in prop::collection::vec(snapshot(), 8)) {
        let m = compile(&rs).unwrap();
        for snap in &snaps {
            prop_assert_eq!(m.step(snap), oracle_step(&rs, snap));
        }
    }

    #[test]
    fn rule_order_does_not_matter(rs in ruleset(), snap in snapshot(), seed in any::<u64>()) {
        let mut shuffled = rs.clone();
        let n = shuffled.rules.len();
        for i in (1..n).rev() {
            let j = (seed.wrapping_mul(6364136223846793005).rotate_left(i as u32) as usize) % (i + 1);
            shuffled.rules.swap(i, j);
        }
        let a = compile(&rs).unwrap().step(&snap);
        let b = compile(&shuffled).unwrap().step(&snap);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn single_rule_matches_nested_if(rs in ruleset(), snap in snapshot()) {
        let m = compile(&rs).unwrap();
        let active = m.active_clauses(&snap, SnapshotMode::Strict).unwrap();
        for (i, rule) in rs.rules.iter().enumerate() {
            prop_assert_eq!(active[i], nested_if(&rs, rule, &snap), "rule {}", rule.id);
        }
    }

    #[test]
    fn active_clause_is_longest_true_prefix(rs in ruleset(), snap in snapshot()) {
        let m = compile(&rs).unwrap();
        let env = snap.values.clone();
        for (ri, rule) in rs.rules.iter().enumerate() {
            let holds = |c: &Condition| oracle::eval_condition(&rs, &env, c);
            let scope_ok = rule.scope.as_ref().is_none_or(|s| holds(&rs.vocabulary.scope(s).unwrap().condition));
            match m.active_clause_index(ri, &snap).unwrap() {
                Some(i) => {
                    prop_assert!(scope_ok);
                    for j in 0..=i {
                        prop_assert!(holds(&rule.clause(j).unwrap().condition));
                    }
                    if let Some(next) = rule.clause(i + 1) {
                        prop_assert!(!holds(&next.condition));
                    }
                }
                None => prop_assert!(!scope_ok || !holds(&rule.base.condition)),
            }
        }
    }

    #[test]
    fn steps_are_stateless(rs in ruleset(), a in snapshot(), b in snapshot()) {
        let m = compile(&rs).unwrap();
        let first = m.step(&a);
        let _ = m.step(&b);
        prop_assert_eq!(m.step(&a), first);
    }

    #[test]
    fn respectful_iff_no_non_noop_active_clause(rs in ruleset(), snap in snapshot()) {
        let m = compile(&rs).unwrap();
        if let Ok(out) = m.step(&snap) {
            let active = m.active_clauses(&snap, SnapshotMode::Strict).unwrap();
            let demanding = rs.rules.iter().zip(&active).any(|(r, a)| {
                a.is_some_and(|i| r.clause(i).unwrap().obligation.atoms.iter().any(|x| x.capability != NOOP))
            });
            prop_assert_eq!(out.is_respectful(), !demanding);
        }
    }

    #[test]
    fn scenario_machine_agrees_with_oracle(seed in any::<u64>()) {
        use rand::SeedableRng;
        let rs = scenario();
        let m = compile(&rs).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let snap = sleec_core::analysis::random_snapshot(&rs, &mut rng);
        prop_assert_eq!(m.step(&snap), oracle_step(&rs, &snap));
    }
}

#[test]
fn snapshot_json_shape() {
    let snap = ConditionSnapshot::new()
        .with("roomTemperature", 27i64)
        .with("userReady", true);
    assert_eq!(
        serde_json::to_string(&snap).unwrap(),
        r#"{"values":{"roomTemperature":27,"userReady":true}}"#
    );
}
