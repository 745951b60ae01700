//! Every task driven through the harness from a JSON configuration.

use statrs::distribution::{ContinuousCDF, Normal};

use girsanov_verdict::harness::{canonical_json, load_config, run, Report, Status, TaskResult};
use girsanov_verdict::radial::KhasminskiiKind;
use girsanov_verdict::sufficiency::GrowthVerdict;
use girsanov_verdict::Tri;

fn run_text(text: &str) -> Report {
    let cfg = load_config(text).unwrap();
    let report = run(&cfg, None).unwrap();
    let json = canonical_json(&report);
    let back: Report = serde_json::from_str(&json).unwrap();
    assert_eq!(canonical_json(&back), json, "report does not round-trip");
    report
}

const INVERSE_RADIUS: &str = r#"{
    "dimension": 3, "domain": "euclidean",
    "b": ["0", "0", "0"], "c": "1",
    "beta": ["x1/(x1^2+x2^2+x3^2)", "x2/(x1^2+x2^2+x3^2)", "x3/(x1^2+x2^2+x3^2)"],
    "x0": [1, 0, 0]
}"#;

#[test]
fn boundary_task_reports_both_laws() {
    let r = run_text(r#"{"task": "boundary", "field": {"b": "0", "c": "1", "beta": "x^3", "x0": 1}}"#);
    let TaskResult::Boundary(laws) = r.result else { panic!("wrong result") };
    assert_eq!(laws.len(), 2);
    assert_eq!(laws[0].upper.accessible, Tri::No);
    assert_eq!(laws[0].recurrent, Some(Tri::Yes));
    assert_eq!(laws[1].upper.accessible, Tri::Yes);
}

#[test]
fn radial_and_envelope_tasks_agree() {
    let radial = run_text(&format!(r#"{{"task": "classify-radial", "field": {INVERSE_RADIUS}}}"#));
    let TaskResult::ClassifyRadial(v) = radial.result else { panic!("wrong result") };
    assert_eq!((v.verdict.local_ac, v.verdict.global_ac), (Tri::Yes, Tri::No));
    assert_eq!(radial.status, Status::Pass);

    let k = run_text(&format!(
        r#"{{"task": "khasminskii", "field": {INVERSE_RADIUS},
            "envelopes": {{"v": "5/2", "w": "1/(2*x)", "direction": "upper_for_divergence"}}}}"#
    ));
    let TaskResult::Khasminskii(k) = k.result else { panic!("wrong result") };
    assert_eq!(k.kind, KhasminskiiKind::NotAbsolutelyContinuous);
}

#[test]
fn growth_task_certifies_linear_growth() {
    let r = run_text(
        r#"{"task": "growth-check", "field": {"b": "-x", "c": "1 + x^2/(1+x^2)", "beta": "x", "x0": 0},
            "gamma": "1", "novikov": {"n": 2}}"#,
    );
    assert_eq!(r.exit_code, 0);
    let TaskResult::GrowthCheck(g) = r.result else { panic!("wrong result") };
    assert!(matches!(g.growth.verdict, GrowthVerdict::SatisfiedOnRange { .. }), "{:?}", g.growth.verdict);
    let nov = g.novikov.unwrap();
    assert_eq!(nov.holds, Tri::Yes);
    // sup over |x| <= 2 of x^2 (1 + x^2/(1+x^2)) is 4 * 1.8, times n = 2.
    assert!((nov.bound - 14.4).abs() < 1e-9, "{}", nov.bound);
    assert!(g.elementary_inequality_max_violation <= 1e-12);
}

#[test]
fn strict_local_martingale_is_detected_by_simulation() {
    let r = run_text(
        r#"{"task": "cross-validate", "field": {"domain": "positive_half_line", "b": "1/x", "c": "1", "beta": "-1/x", "x0": 1},
            "mc": {"n_paths": 20000, "seed": 5}}"#,
    );
    let TaskResult::CrossValidate(cv) = r.result else { panic!("wrong result") };
    assert_eq!(cv.classification.local_ac, Tri::No);
    let cv = cv.cross_validation.unwrap();
    assert!(cv.passed, "{:?}", cv.narrative);
    let z = cv.transfer.under_p.mean_z;
    let oracle = 2.0 * Normal::standard().cdf(1.0) - 1.0;
    assert!((z.mean - oracle).abs() <= 3.0 * z.se, "{} vs {oracle}", z.mean);
    assert_eq!(r.status, Status::Pass);
}

#[test]
fn simulate_task_matches_the_normal_oracle() {
    // Under P the coordinate is a standard Brownian motion, so the
    // indicator of X_1 > 0.5 has mean 1 - Phi(0.5); under the weighted
    // measure the drift is 1 and the target is 1 - Phi(-0.5).
    let r = run_text(
        r#"{"task": "simulate", "field": {"b": "0", "c": "1", "beta": "1", "x0": 0},
            "mc": {"n_paths": 20000, "seed": 3, "measure": "under_qstar"}}"#,
    );
    let TaskResult::Simulate(s) = r.result else { panic!("wrong result") };
    let above = s
        .functionals
        .iter()
        .find(|f| matches!(f.functional, girsanov_verdict::mc::Functional::IndicatorAbove { .. }))
        .unwrap();
    let oracle = 1.0 - Normal::standard().cdf(-1.0);
    assert!((above.estimate - oracle).abs() <= 3.0 * above.se, "{} vs {oracle}", above.estimate);
}
