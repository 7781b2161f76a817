use std::collections::BTreeMap;

use algforge::check::CheckResult;
use algforge::scenario::Scenario;
use algforge::verify::{check_info, run_suite, SuiteOptions, VerifyError, CHECKS};

const SO3: &str = r#"{
  "name": "so3",
  "algebroid": {
    "base_dim": 3,
    "rank": 3,
    "rho": [["0", "x3", "-x2"], ["-x3", "0", "x1"], ["x2", "-x1", "0"]],
    "C": [
      {"a": 1, "b": 2, "c": 3, "expr": 1},
      {"a": 2, "b": 1, "c": 3, "expr": -1},
      {"a": 3, "b": 1, "c": 2, "expr": 1}
    ]
  },
  "sampling": {"seed": 7, "points": 20, "box": 1.0}
}"#;

const NONFLAT_PLANE: &str = r#"{
  "name": "plane",
  "algebroid": {"base_dim": 2, "rank": 2, "rho": [["1", "0"], ["0", "1"]], "C": []},
  "connection": {"omega": [
    {"a": 1, "b": 2, "alpha": 1, "expr": "x1*x2"},
    {"a": 2, "b": 1, "alpha": 2, "expr": "0.5 - x1^2"}
  ]},
  "sampling": {"seed": 3, "points": 20, "box": 1.0}
}"#;

/// Anchor that is undefined on half of the sampling box.
const SINGULAR: &str = r#"{
  "name": "singular",
  "algebroid": {"base_dim": 1, "rank": 1, "rho": [["ln(x1)"]], "C": []},
  "sampling": {"seed": 1, "points": 20, "box": 1.0}
}"#;

fn scenario(text: &str) -> Scenario {
    Scenario::from_json_str(text).unwrap()
}

fn opts(checks: &[&str]) -> SuiteOptions {
    SuiteOptions { checks: checks.iter().map(|s| s.to_string()).collect(), ..SuiteOptions::default() }
}

fn stable(r: &CheckResult) -> (String, bool, u64, u64, usize, String, Option<String>) {
    (r.id.clone(), r.pass, r.max_residual.to_bits(), r.seed, r.points, r.digest.clone(), r.note.clone())
}

#[test]
fn registry_is_complete_and_case_insensitive() {
    assert_eq!(CHECKS.len(), 15);
    for (i, c) in CHECKS.iter().enumerate() {
        assert_eq!(c.id, format!("V{}", i + 1));
        assert_eq!(check_info(&c.id.to_lowercase()), Some(c));
        assert!(c.tolerance > 0.0);
    }
    assert!(check_info("V16").is_none());
}

#[test]
fn reports_are_reproducible() {
    let s = scenario(SO3);
    let o = opts(&["V1", "V5", "V10", "V15"]);
    let a = run_suite(&s, &o).unwrap();
    let b = run_suite(&s, &o).unwrap();
    let ka: Vec<_> = a.results.iter().map(stable).collect();
    let kb: Vec<_> = b.results.iter().map(stable).collect();
    assert_eq!(ka, kb);
}

#[test]
fn requested_checks_appear_once_in_order() {
    let s = scenario(SO3);
    let r = run_suite(&s, &opts(&["v4", "V1", "V4", "v2"])).unwrap();
    let ids: Vec<&str> = r.results.iter().map(|c| c.id.as_str()).collect();
    assert_eq!(ids, ["V4", "V1", "V2"]);
    assert!(r.skipped.is_empty());
}

#[test]
fn full_suite_runs_every_applicable_check() {
    let s = scenario(SO3);
    let r = run_suite(&s, &SuiteOptions::default()).unwrap();
    assert_eq!(r.results.len() + r.skipped.len(), 15);
    assert!(r.all_pass(), "{:#?}", r.results.iter().filter(|c| !c.pass).collect::<Vec<_>>());
    for c in &r.results {
        assert_eq!(c.pass, c.max_residual <= c.tolerance);
        assert_eq!(c.tolerance, check_info(&c.id).unwrap().tolerance);
    }
}

#[test]
fn unknown_ids_are_rejected() {
    let s = scenario(SO3);
    assert_eq!(run_suite(&s, &opts(&["V99"])).unwrap_err(), VerifyError::UnknownCheck("V99".into()));
    let mut o = opts(&["V1"]);
    o.tolerances.insert("W1".into(), 1e-3);
    assert!(matches!(run_suite(&s, &o), Err(VerifyError::UnknownCheck(_))));
}

#[test]
fn inapplicable_checks_error_when_requested_and_skip_otherwise() {
    let s = scenario(NONFLAT_PLANE);
    match run_suite(&s, &opts(&["V10"])) {
        Err(VerifyError::Precondition { id, .. }) => assert_eq!(id, "V10"),
        other => panic!("expected a precondition error, got {other:?}"),
    }
    let r = run_suite(&s, &SuiteOptions::default()).unwrap();
    let skipped: Vec<&str> = r.skipped.iter().map(|k| k.id.as_str()).collect();
    assert!(skipped.contains(&"V8") && skipped.contains(&"V10"), "{skipped:?}");
    assert!(r.results.iter().all(|c| !skipped.contains(&c.id.as_str())));
    // V6 and V3 carry the curvature of this connection
    assert!(r.all_pass(), "{:#?}", r.results.iter().filter(|c| !c.pass).collect::<Vec<_>>());
}

#[test]
fn verdicts_do_not_depend_on_the_seed() {
    let s = scenario(SO3);
    let ids = ["V1", "V2", "V5", "V7", "V13"];
    let mut o = opts(&ids);
    let first: Vec<bool> = run_suite(&s, &o).unwrap().results.iter().map(|c| c.pass).collect();
    for seed in [1, 99, 123456] {
        o.seed = Some(seed);
        let r = run_suite(&s, &o).unwrap();
        assert!(r.results.iter().all(|c| c.seed == seed));
        assert_eq!(r.results.iter().map(|c| c.pass).collect::<Vec<_>>(), first);
    }
}

#[test]
fn tolerance_overrides_apply_per_check() {
    let s = scenario(SO3);
    let o = SuiteOptions {
        checks: vec!["V1".into(), "V2".into()],
        tolerance: Some(1e-3),
        tolerances: BTreeMap::from([("v2".to_string(), 0.0)]),
        ..SuiteOptions::default()
    };
    let r = run_suite(&s, &o).unwrap();
    assert_eq!(r.results[0].tolerance, 1e-3);
    assert_eq!(r.results[1].tolerance, 0.0);
}

#[test]
fn sampling_overrides_are_recorded() {
    let s = scenario(SO3);
    let o = SuiteOptions { checks: vec!["V1".into()], points: Some(5), seed: Some(11), ..SuiteOptions::default() };
    let r = run_suite(&s, &o).unwrap();
    assert_eq!((r.results[0].points, r.results[0].seed), (5, 11));
    let bad = SuiteOptions { points: Some(0), ..o };
    assert!(matches!(run_suite(&s, &bad), Err(VerifyError::Scenario(_))));
}

#[test]
fn non_finite_residuals_fail_with_a_diagnostic() {
    let s = scenario(SINGULAR);
    let r = run_suite(&s, &opts(&["V5"])).unwrap();
    let c = &r.results[0];
    assert!(!c.pass);
    assert!(!c.max_residual.is_finite() || c.max_residual.is_nan());
    assert!(c.note.as_deref().is_some_and(|n| !n.is_empty()), "{c:?}");
}

#[test]
fn report_serializes_round_trip() {
    let s = scenario(SO3);
    let r = run_suite(&s, &opts(&["V1"])).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: algforge::verify::VerificationReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
}
