//! Property-based invariants across modules.

use proptest::prelude::*;

use girsanov_verdict::classify1d::{classify, ClassifyConfig};
use girsanov_verdict::expr::{CoefficientField, Domain, Expression};
use girsanov_verdict::mc::{simulate, SimConfig};
use girsanov_verdict::quad::{integrate, QuadConfig};
use girsanov_verdict::sufficiency::{growth_ratios, local_novikov_check};
use girsanov_verdict::Tri;

fn integral(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    integrate(f, a, b, &QuadConfig::default()).unwrap().value
}

fn close(x: f64, y: f64, scale: f64) -> bool {
    (x - y).abs() <= 1e-7 * scale.max(1.0)
}

fn expression_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("x".to_string()),
        Just("t".to_string()),
        (1u32..9).prop_map(|k| k.to_string()),
        (1u32..9).prop_map(|k| format!("{k}.5")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]))
                .prop_map(|(a, b, op)| format!("({a} {op} {b})")),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| format!("{a}^{k}")),
            (inner.clone(), prop::sample::select(vec!["exp", "abs", "sqrt", "sign"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("piecewise({a} < {b}, {a}, -{b})")),
            Just("-x".to_string()),
        ]
    })
}

fn same_value(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_is_additive(p in -2.0f64..2.0, q in -3.0f64..3.0, a in -3.0f64..0.0, mid in 0.0f64..1.0, w in 0.1f64..3.0) {
        let f = |x: f64| (p * x).exp() + q * x * x;
        let b = a + mid * w;
        let c = a + w;
        let whole = integral(&f, a, c);
        let parts = integral(&f, a, b) + integral(&f, b, c);
        prop_assert!(close(whole, parts, whole.abs()), "{whole} vs {parts}");
    }

    #[test]
    fn quadrature_is_linear(alpha in -5.0f64..5.0, a in -2.0f64..2.0, w in 0.1f64..4.0) {
        let f = |x: f64| x.sin() + 1.0 / (1.0 + x * x);
        let g = |x: f64| (-x * x).exp();
        let combined = integral(&|x| alpha * f(x) + g(x), a, a + w);
        let separate = alpha * integral(&f, a, a + w) + integral(&g, a, a + w);
        prop_assert!(close(combined, separate, combined.abs() + alpha.abs()), "{combined} vs {separate}");
    }

    #[test]
    fn quadrature_is_monotone(shift in 0.0f64..2.0, a in -2.0f64..2.0, w in 0.1f64..4.0) {
        let f = |x: f64| (x * x).sqrt() * (-x.abs()).exp();
        let g = |x: f64| f(x) + shift * x.cos().powi(2);
        prop_assert!(integral(&f, a, a + w) <= integral(&g, a, a + w) + 1e-12);
    }

    #[test]
    fn expressions_survive_printing(text in expression_text(), x in -3.0f64..3.0, t in 0.0f64..2.0) {
        let e = Expression::parse(&text).unwrap();
        let again = Expression::parse(&e.to_string()).unwrap();
        prop_assert_eq!(&e, &again, "printed as {}", e);
        let (u, v) = (e.eval(&[x], t), again.eval(&[x], t));
        match (u, v) {
            (Ok(u), Ok(v)) => prop_assert!(same_value(u, v), "{u} vs {v}"),
            (u, v) => prop_assert_eq!(u.is_err(), v.is_err()),
        }
    }

    #[test]
    fn drift_ratio_grows_with_perturbation_size(k in 0.0f64..5.0, extra in 0.0f64..5.0, x in -50.0f64..50.0) {
        let field = |m: f64| {
            CoefficientField::one_dimensional(Domain::RealLine, "0", "1", &format!("{m} * x"), 0.0).unwrap()
        };
        let (small, _) = growth_ratios(&field(k), &[x]).unwrap();
        let (large, _) = growth_ratios(&field(k + extra), &[x]).unwrap();
        prop_assert!(small <= large, "{small} > {large}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn novikov_bound_grows_with_the_ball(m in 0.1f64..3.0, power in 0u32..4) {
        let field = CoefficientField::one_dimensional(Domain::RealLine, "0", "1", &format!("{m} * x^{power}"), 0.0).unwrap();
        let bounds: Vec<f64> = (1..=4)
            .map(|n| local_novikov_check(&field, n, 8, 7).unwrap().bound)
            .collect();
        prop_assert!(bounds.windows(2).all(|w| w[0] <= w[1]), "{bounds:?}");
    }

    #[test]
    fn global_implies_local(
        a in prop::sample::select(vec![-2.0, -1.0, 0.0, 1.0]),
        cubic in prop::sample::select(vec![-1.0, 0.0, 1.0]),
        s in prop::sample::select(vec![0.0, 0.5]),
        beta in prop::sample::select(vec!["0", "1", "-0.5", "x", "x^3", "piecewise(x^2 < 1, 1 - x^2, 0)"]),
    ) {
        let b = format!("{a} * x + {cubic} * x^3");
        let c = format!("1 + {s} * x^2");
        let field = CoefficientField::one_dimensional(Domain::RealLine, &b, &c, beta, 0.0).unwrap();
        let v = classify(&field, &ClassifyConfig::default()).unwrap();
        prop_assert!(v.global_ac != Tri::Yes || v.local_ac == Tri::Yes, "{b}, {c}, {beta}: {:?}/{:?}", v.local_ac, v.global_ac);
        if beta == "0" {
            prop_assert_eq!((v.local_ac, v.global_ac), (Tri::Yes, Tri::Yes));
        }
    }

    #[test]
    fn density_stays_positive(m in -2.0f64..2.0, a in -1.0f64..1.0, seed in any::<u64>()) {
        let field = CoefficientField::one_dimensional(Domain::RealLine, &format!("{a} * x"), "1", &format!("{m}"), 0.0).unwrap();
        let cfg = SimConfig { n_paths: 64, dt: 1e-2, seed, ..SimConfig::default() };
        let r = simulate(&field, &cfg).unwrap();
        prop_assert!(r.min_z > 0.0 && r.mean_z.mean.is_finite(), "min {} mean {}", r.min_z, r.mean_z.mean);
        prop_assert!(r.h_truncation_ok);
    }
}
