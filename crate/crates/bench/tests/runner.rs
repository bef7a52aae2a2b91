use sleec_bench::bench::model_suite;
use sleec_bench::fixtures::CONFLICT;
use sleec_bench::synthetic::synthetic_config;
use sleec_bench::*;
use sleec_core::format_ruleset;
use sleec_server::{spawn, ServerState};

#[tokio::test]
async fn empty_case_list_runs_nothing() {
    let r = run_suite("", &[], &Target::InProcess).await.unwrap();
    assert_eq!(r.matches, 0);
    assert!(r.mismatches.is_empty());
    assert!(r.records.is_empty());
}

#[tokio::test(flavor = "multi_thread")]
async fn transports_agree_on_a_synthetic_model() {
    let suite = synthetic_suite(SyntheticSpec::new(4, 3, 9).unwrap(), 30);
    for transport in Transport::ALL {
        let (report, results) = run_bench(std::slice::from_ref(&suite), transport, None, 9)
            .await
            .unwrap();
        assert_eq!(report.matches(), 30, "{transport}");
        assert_eq!(results[0].records.len(), 30, "{transport}");
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn wrong_expectation_is_reported_as_mismatch() {
    let rs = load_scenario();
    let mut cases = generate_test_cases(&rs, 60, 4);
    let victim = cases
        .iter()
        .position(|c| !c.expected.directives.is_empty())
        .unwrap();
    cases[victim].expected.directives.clear();
    let r = run_suite(sleec_bench::fixtures::SCENARIO, &cases, &Target::InProcess)
        .await
        .unwrap();
    assert_eq!(r.matches, 59);
    assert_eq!(r.mismatches.len(), 1);
    assert_eq!(r.mismatches[0].id, cases[victim].id);
}

#[tokio::test(flavor = "multi_thread")]
async fn conflicting_steps_match_by_error_code_over_http() {
    let server = spawn("127.0.0.1:0".parse().unwrap(), ServerState::new())
        .await
        .unwrap();
    let suite = model_suite(
        "conflict",
        CONFLICT,
        sleec_enforcement::LoopConfig::new(""),
        40,
        2,
    )
    .unwrap();
    assert!(suite.cases.iter().any(|c| c.expected_error.is_some()));
    let target = Target::Http {
        server_url: server.url(),
    };
    let r = run_suite(&suite.model, &suite.cases, &target)
        .await
        .unwrap();
    assert_eq!(r.matches, 40, "{:?}", r.mismatches.first());
    server.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn full_loop_against_explicit_server() {
    let server = spawn("127.0.0.1:0".parse().unwrap(), ServerState::new())
        .await
        .unwrap();
    let rs = generate_synthetic_ruleset(SyntheticSpec::new(3, 3, 5).unwrap());
    let cases = generate_test_cases(&rs, 20, 5);
    let target = Target::FullLoop {
        config: Box::new(synthetic_config(&rs, &server.url())),
    };
    let r = run_suite(&format_ruleset(&rs), &cases, &target)
        .await
        .unwrap();
    assert_eq!(r.matches, 20);
    assert!(r.records.iter().all(|rec| rec.is_ordered()));
    server.shutdown().await.unwrap();
}

#[tokio::test(flavor = "multi_thread")]
async fn unreachable_server_aborts_with_partial_results() {
    let rs = load_scenario();
    let cases = generate_test_cases(&rs, 5, 1);
    let target = Target::Http {
        server_url: "http://127.0.0.1:9".into(),
    };
    let err = run_suite(sleec_bench::fixtures::SCENARIO, &cases, &target)
        .await
        .unwrap_err();
    assert_eq!(err.partial.matches, 0);
}

#[tokio::test(flavor = "multi_thread")]
async fn grid_report_fits_server_latency_against_size() {
    let suites: Vec<Suite> = [(2, 2), (4, 4), (8, 6), (10, 8)]
        .into_iter()
        .map(|(r, c)| synthetic_suite(SyntheticSpec::new(r, c, 1).unwrap(), 10))
        .collect();
    let (report, _) = run_bench(&suites, Transport::InProcess, None, 1)
        .await
        .unwrap();
    assert_eq!(report.suites.len(), 4);
    assert!(matches!(report.fits, Some(Ok(_))));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    report.write_json(&path).unwrap();
    let back: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(back["suites"].as_array().unwrap().len(), 4);
}
