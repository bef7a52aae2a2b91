use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;
use sleec_core::{parse_ruleset, ConditionSnapshot, Ruleset, SnapshotMode, Value};
use sleec_enforcement::config::Threshold;
use sleec_enforcement::{Monitor, ProbeSample};

fn scenario() -> Arc<Ruleset> {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../fixtures/assistive.sleec"
    );
    Arc::new(parse_ruleset(&std::fs::read_to_string(path).unwrap()).unwrap())
}

fn seeded(mode: SnapshotMode) -> Monitor {
    let rs = scenario();
    let mut m = Monitor::new(rs.clone(), &[], mode);
    let all: Vec<ProbeSample> = ConditionSnapshot::all_false(&rs.vocabulary)
        .values
        .into_iter()
        .map(|(k, v)| ProbeSample::new(k, v, 0))
        .collect();
    assert!(m.process_batch(&all).unwrap().is_some());
    m
}

#[test]
fn warm_room_changes_only_the_derived_condition() {
    let mut m = seeded(SnapshotMode::Strict);
    assert_eq!(
        m.process(&ProbeSample::new("roomTemperature", 25i64, 1))
            .unwrap(),
        None
    );
    let d = m
        .process(&ProbeSample::new("roomTemperature", 27i64, 2))
        .unwrap()
        .unwrap();
    assert_eq!(
        d.changed,
        BTreeMap::from([("tooWarm".to_string(), Value::Bool(true))])
    );
    assert_eq!(d.snapshot.get("roomTemperature"), Some(&Value::Int(27)));
    assert_eq!(
        m.process(&ProbeSample::new("roomTemperature", 27i64, 3))
            .unwrap(),
        None
    );
}

#[test]
fn first_boolean_observation_is_a_change() {
    let rs = scenario();
    let mut m = Monitor::new(rs, &[], SnapshotMode::Lenient);
    let first = m
        .process_batch(&[
            ProbeSample::new("timeOfDay", Value::Enum("TRAININGTIME".into()), 0),
            ProbeSample::new("roomTemperature", 20i64, 0),
        ])
        .unwrap()
        .unwrap();
    assert_eq!(first.changed.len(), 2);
    let d = m
        .process(&ProbeSample::new("userExercising", false, 1))
        .unwrap()
        .unwrap();
    assert_eq!(
        d.changed,
        BTreeMap::from([("userExercising".to_string(), Value::Bool(false))])
    );
}

#[test]
fn probe_errors() {
    let mut m = seeded(SnapshotMode::Strict);
    let e = m
        .process(&ProbeSample::new("heartRate", 80i64, 1))
        .unwrap_err();
    assert_eq!(e.code(), "UNKNOWN_SOURCE");
    m.process(&ProbeSample::new("userReady", true, 10)).unwrap();
    let e = m
        .process(&ProbeSample::new("userReady", false, 9))
        .unwrap_err();
    assert_eq!(e.code(), "STALE_SAMPLE");
    let e = m
        .process(&ProbeSample::new(
            "timeOfDay",
            Value::Enum("TEATIME".into()),
            11,
        ))
        .unwrap_err();
    assert_eq!(e.code(), "TYPE_MISMATCH");
}

#[test]
fn thresholds_feed_boolean_conditions() {
    let rs = scenario();
    let t = Threshold {
        condition: "userSleeping".into(),
        source: "sleepScore".into(),
        op: sleec_core::syntax::RelOp::Ge,
        value: 0.5,
    };
    let mut m = Monitor::new(rs, &[t], SnapshotMode::Lenient);
    m.process_batch(&[
        ProbeSample::new("timeOfDay", Value::Enum("MEALTIME".into()), 0),
        ProbeSample::new("roomTemperature", 20i64, 0),
    ])
    .unwrap();
    let d = m
        .process(&ProbeSample::new("sleepScore", 0.8, 1))
        .unwrap()
        .unwrap();
    assert_eq!(
        d.changed,
        BTreeMap::from([("userSleeping".to_string(), Value::Bool(true))])
    );
    assert_eq!(
        m.process(&ProbeSample::new("sleepScore", 0.9, 2)).unwrap(),
        None
    );
}

const BOOLS: [&str; 4] = ["userReady", "dataRequested", "lowGlucose", "userSleeping"];

proptest! {
    /// Publication happens exactly when some observed condition changed.
    #[test]
    fn publishes_iff_a_condition_changed(
        script in prop::collection::vec((0..BOOLS.len(), any::<bool>(), 10i64..=40), 1..40)
    ) {
        let mut m = seeded(SnapshotMode::Strict);
        let mut bools: BTreeMap<&str, bool> = BOOLS.iter().map(|b| (*b, false)).collect();
        let mut warm = false;
        for (i, (var, value, temp)) in script.into_iter().enumerate() {
            let ts = i as u64 + 1;
            let delta = m
                .process_batch(&[
                    ProbeSample::new(BOOLS[var], value, ts),
                    ProbeSample::new("roomTemperature", temp, ts),
                ])
                .unwrap();
            let changed = bools[BOOLS[var]] != value || warm != (temp >= 26);
            bools.insert(BOOLS[var], value);
            warm = temp >= 26;
            prop_assert_eq!(delta.is_some(), changed);
        }
    }
}
