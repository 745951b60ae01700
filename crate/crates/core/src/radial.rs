//! Reduction of multi-dimensional fields to the radial variable
//! `r = |x|^2 / 2`.
//!
//! Under the dominated law `r` has diffusion coefficient `c_hat = <x, c x>`,
//! drift `b_hat = <x, b + c beta> + tr(c)/2`, and the integrand of `H` is
//! `f_hat = <beta, c beta>`. When all three depend on `x` only through `r`
//! (checked on random directions), the one-dimensional battery on `(0, inf)`
//! decides the field exactly. Otherwise user-supplied envelopes `v, w` give
//! one-sided comparison verdicts.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify1d::{
    battery_from_profile, beta_zero_verdict, classify, verdicts, ACVerdict, ClassifyConfig, ClassifyError, Condition,
    ConditionBattery, BOUNDARY_READING_NOTE,
};
use crate::expr::{quadratic_form, CoefficientField, Domain, EvalError, Expression};
use crate::quad::IntegrabilityVerdict;
use crate::scale::{build_scale, real_fn, Boundary, RealFn, ScaleError, ScaleProfile};
use crate::Tri;

/// Smallest admissible `|x0|`.
pub const MIN_START_NORM: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    pub classify: ClassifyConfig,
    /// Random unit directions per probed radius.
    pub directions: usize,
    pub radial_tol: f64,
    /// Shell radii `|x|` are log-spaced in `[min_norm, max_norm]`.
    pub shells: usize,
    pub min_norm: f64,
    pub max_norm: f64,
    pub direction_seed: u64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig {
            classify: ClassifyConfig::default(),
            directions: 64,
            radial_tol: 1e-6,
            shells: 32,
            min_norm: 1e-3,
            max_norm: 1e3,
            direction_seed: 0x5EED_D1EC,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadialError {
    #[error("{0}")]
    Usage(String),
    #[error("{quantity} is not radial: relative spread {residual:e} at |x| = {norm} between directions {first:?} and {second:?}")]
    NotRadial {
        quantity: &'static str,
        residual: f64,
        norm: f64,
        first: Vec<f64>,
        second: Vec<f64>,
    },
    #[error("coefficients cannot be evaluated at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: EvalError },
    #[error("the origin is not shown inaccessible for the radial process (verdict {inaccessible}); the radial reduction does not apply")]
    OriginAccessible {
        inaccessible: Tri,
        battery: Box<ConditionBattery>,
    },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

/// Radial quantities at one point: `(c_hat, b_hat, f_hat)`.
fn radial_at(field: &CoefficientField, x: &[f64]) -> Result<[f64; 3], EvalError> {
    let d = field.dimension();
    let mut b = vec![0.0; d];
    let mut beta = vec![0.0; d];
    let mut c = vec![0.0; d * d];
    field.eval_b(x, 0.0, &mut b)?;
    field.eval_beta(x, 0.0, &mut beta)?;
    field.eval_c(x, 0.0, &mut c)?;
    let mut drift = 0.0;
    let mut trace = 0.0;
    for i in 0..d {
        let cb: f64 = (0..d).map(|j| c[i * d + j] * beta[j]).sum();
        drift += x[i] * (b[i] + cb);
        trace += c[i * d + i];
    }
    Ok([quadratic_form(&c, x, d), drift + 0.5 * trace, quadratic_form(&c, &beta, d)])
}

fn c_hat_at(field: &CoefficientField, x: &[f64]) -> Result<f64, EvalError> {
    let d = field.dimension();
    let mut c = vec![0.0; d * d];
    field.eval_c(x, 0.0, &mut c)?;
    Ok(quadratic_form(&c, x, d))
}

/// Deterministic random unit vectors.
pub fn unit_directions(d: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-8 {
            out.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    out
}

fn shell_norms(cfg: &RadialConfig) -> Vec<f64> {
    let n = cfg.shells.max(2);
    let (a, b) = (cfg.min_norm.ln(), cfg.max_norm.ln());
    (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
}

fn scaled(u: &[f64], rho: f64) -> Vec<f64> {
    u.iter().map(|a| a * rho).collect()
}

fn relative_spread(values: &[f64]) -> (f64, usize, usize) {
    let (mut imin, mut imax) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v < values[imin] {
            imin = i;
        }
        if *v > values[imax] {
            imax = i;
        }
    }
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let spread = values[imax] - values[imin];
    let rel = if spread == 0.0 { 0.0 } else { spread / scale.max(f64::MIN_POSITIVE) };
    (rel, imin, imax)
}

/// The one-dimensional coefficients of the radial variable.
#[derive(Clone)]
pub struct RadialReduction {
    pub c_hat: RealFn,
    pub b_hat: RealFn,
    pub f_hat: RealFn,
    pub consistency_residual: f64,
}

impl std::fmt::Debug for RadialReduction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialReduction")
            .field("consistency_residual", &self.consistency_residual)
            .finish()
    }
}

fn require_multi(field: &CoefficientField) -> Result<(), RadialError> {
    if field.dimension() < 2 {
        return Err(RadialError::Usage("radial reduction needs dimension at least 2".into()));
    }
    if field.is_time_dependent() {
        return Err(RadialError::Usage("radial reduction needs time-independent coefficients".into()));
    }
    let norm = field.x0().iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm < MIN_START_NORM {
        return Err(RadialError::Usage(format!("the start point must satisfy |x0| >= {MIN_START_NORM:e}")));
    }
    Ok(())
}

/// Check that the selected radial quantities agree across directions on
/// every shell; returns the worst relative spread.
fn check_radial(
    field: &CoefficientField,
    cfg: &RadialConfig,
    dirs: &[Vec<f64>],
    which: &[usize],
) -> Result<f64, RadialError> {
    const NAMES: [&str; 3] = ["<x, c x>", "<x, b + c beta> + tr c / 2", "<beta, c beta>"];
    let mut worst = 0.0f64;
    for rho in shell_norms(cfg) {
        let mut samples: Vec<[f64; 3]> = Vec::with_capacity(dirs.len());
        for u in dirs {
            let x = scaled(u, rho);
            let q = radial_at(field, &x).map_err(|source| RadialError::Eval { point: x.clone(), source })?;
            samples.push(q);
        }
        for &k in which {
            let vals: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let (rel, imin, imax) = relative_spread(&vals);
            worst = worst.max(rel);
            if rel > cfg.radial_tol {
                return Err(RadialError::NotRadial {
                    quantity: NAMES[k],
                    residual: rel,
                    norm: rho,
                    first: dirs[imin].clone(),
                    second: dirs[imax].clone(),
                });
            }
        }
    }
    Ok(worst)
}

fn averaged(field: &Arc<CoefficientField>, dirs: &Arc<Vec<Vec<f64>>>, k: usize) -> RealFn {
    let (field, dirs) = (field.clone(), dirs.clone());
    real_fn(move |r: f64| {
        if !(r > 0.0) {
            return f64::NAN;
        }
        let rho = (2.0 * r).sqrt();
        let mut sum = 0.0;
        for u in dirs.iter() {
            match radial_at(&field, &scaled(u, rho)) {
                Ok(q) => sum += q[k],
                Err(_) => return f64::NAN,
            }
        }
        sum / dirs.len() as f64
    })
}

/// Reduce a radial field to its one-dimensional coefficients.
pub fn radial_reduce(field: &CoefficientField, cfg: &RadialConfig) -> Result<RadialReduction, RadialError> {
    require_multi(field)?;
    let dirs = unit_directions(field.dimension(), cfg.directions.max(2), cfg.direction_seed);
    let residual = check_radial(field, cfg, &dirs, &[0, 1, 2])?;
    let field = Arc::new(field.clone());
    let dirs = Arc::new(dirs);
    Ok(RadialReduction {
        c_hat: averaged(&field, &dirs, 0),
        b_hat: averaged(&field, &dirs, 1),
        f_hat: averaged(&field, &dirs, 2),
        consistency_residual: residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialVerdict {
    pub verdict: ACVerdict,
    /// Inaccessibility of the origin for the radial process.
    pub origin_inaccessible: Tri,
    pub consistency_residual: Option<f64>,
}

/// Exact classification through the radial variable. Fields of dimension 1
/// on the half-line are already radial and get the full two-boundary
/// battery; in higher dimension the origin must be inaccessible.
pub fn classify_radial(field: &CoefficientField, cfg: &RadialConfig) -> Result<RadialVerdict, RadialError> {
    if field.dimension() == 1 {
        if field.domain() != Domain::PositiveHalfLine {
            return Err(RadialError::Usage(
                "one-dimensional radial fields live on the positive half-line".into(),
            ));
        }
        let verdict = classify(field, &cfg.classify)?;
        let b = &verdict.battery;
        let origin_inaccessible = b.minus1.holds.or(b.minus2.holds);
        return Ok(RadialVerdict {
            verdict,
            origin_inaccessible,
            consistency_residual: None,
        });
    }
    let red = radial_reduce(field, cfg)?;
    let profile = build_scale(red.b_hat.clone(), red.c_hat.clone(), Domain::PositiveHalfLine, &cfg.classify.quad)?;
    let zero = field.beta_is_syntactically_zero();
    let (c_hat, f_hat) = (red.c_hat.clone(), red.f_hat.clone());
    let battery = battery_from_profile(&profile, &|r| f_hat(r) / c_hat(r), zero);
    let origin_inaccessible = battery.minus1.holds.or(battery.minus2.holds);
    if origin_inaccessible != Tri::Yes {
        return Err(RadialError::OriginAccessible {
            inaccessible: origin_inaccessible,
            battery: Box::new(battery),
        });
    }
    let f_hat = red.f_hat.clone();
    let beta_zero = beta_zero_verdict(&|r| f_hat(r).max(0.0).sqrt(), zero, Domain::PositiveHalfLine, &cfg.classify);
    let (local_ac, global_ac) = verdicts(&battery, beta_zero);
    Ok(RadialVerdict {
        verdict: ACVerdict {
            local_ac,
            global_ac,
            beta_zero,
            battery,
            notes: vec![
                BOUNDARY_READING_NOTE.to_string(),
                "radial variable r = |x|^2/2; the origin is inaccessible, as the reduction requires".into(),
            ],
        },
        origin_inaccessible,
        consistency_residual: Some(red.consistency_residual),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeDirection {
    /// `v` bounds the radial drift from above and `w <= <beta, c beta>` is
    /// decreasing; used to prove divergence of `H`.
    UpperForDivergence,
    /// `v` bounds the radial drift from below and `w >= <beta, c beta>` is
    /// increasing; used to prove finiteness of `H`.
    LowerForConvergence,
}

/// Envelopes as functions of the radial variable, written in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePair {
    pub v: Expression,
    pub w: Expression,
    pub direction: EnvelopeDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeWitness {
    pub point: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub passed: bool,
    pub samples: usize,
    pub witness: Option<EnvelopeWitness>,
}

fn slack(a: f64, b: f64) -> f64 {
    1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Check the envelope inequalities on spherical shells and the monotonicity
/// of `w` on the radial grid.
pub fn verify_envelopes(field: &CoefficientField, env: &EnvelopePair, cfg: &RadialConfig) -> Result<EnvelopeReport, RadialError> {
    require_multi(field)?;
    let dirs = unit_directions(field.dimension(), cfg.directions.max(2), cfg.direction_seed);
    let fail = |point: Vec<f64>, detail: String, samples: usize| EnvelopeReport {
        passed: false,
        samples,
        witness: Some(EnvelopeWitness { point, detail }),
    };
    let upper = env.direction == EnvelopeDirection::UpperForDivergence;
    let mut samples = 0;
    let mut w_positive = false;
    let norms = shell_norms(cfg);
    let mut previous_w: Option<(f64, f64)> = None;
    for &rho in &norms {
        let r = 0.5 * rho * rho;
        let (v, w) = match (env.v.eval1(r), env.w.eval1(r)) {
            (Ok(v), Ok(w)) => (v, w),
            _ => return Ok(fail(vec![rho], format!("envelopes cannot be evaluated at r = {r}"), samples)),
        };
        if !(v > 0.0) {
            return Ok(fail(vec![rho], format!("v(r) = {v} is not positive at r = {r}"), samples));
        }
        if w < 0.0 {
            return Ok(fail(vec![rho], format!("w(r) = {w} is negative at r = {r}"), samples));
        }
        w_positive |= w > 0.0;
        if let Some((r0, w0)) = previous_w {
            let bad = if upper { w > w0 + slack(w, w0) } else { w < w0 - slack(w, w0) };
            if bad {
                let trend = if upper { "decreasing" } else { "increasing" };
                return Ok(fail(vec![rho], format!("w is not {trend}: w({r0}) = {w0}, w({r}) = {w}"), samples));
            }
        }
        previous_w = Some((r, w));
        for u in &dirs {
            let x = scaled(u, rho);
            let [_, drift, energy] = radial_at(field, &x).map_err(|source| RadialError::Eval { point: x.clone(), source })?;
            samples += 1;
            let drift_bad = if upper { v < drift - slack(v, drift) } else { v > drift + slack(v, drift) };
            if drift_bad {
                let rel = if upper { "below" } else { "above" };
                return Ok(fail(x, format!("v = {v} lies {rel} the radial drift {drift}"), samples));
            }
            let energy_bad = if upper { energy < w - slack(energy, w) } else { energy > w + slack(energy, w) };
            if energy_bad {
                let rel = if upper { "exceeds" } else { "falls below" };
                return Ok(fail(x, format!("w = {w} {rel} <beta, c beta> = {energy}"), samples));
            }
        }
    }
    if upper && !w_positive {
        return Ok(fail(Vec::new(), "w vanishes on every probed shell, so {w > 0} has no mass".into(), samples));
    }
    Ok(EnvelopeReport {
        passed: true,
        samples,
        witness: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KhasminskiiKind {
    NotAbsolutelyContinuous,
    AbsolutelyContinuous,
    Inconclusive,
}

/// The eight comparison conditions on the envelope diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonConditions {
    pub plus1: Condition,
    pub plus2: Condition,
    pub plus3: Condition,
    pub plus4: Condition,
    pub minus1: Condition,
    pub minus2: Condition,
    pub minus3: Condition,
    pub minus4: Condition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KhasminskiiVerdict {
    pub kind: KhasminskiiKind,
    pub matched_case: Option<String>,
    pub envelopes: EnvelopeReport,
    pub conditions: Option<ComparisonConditions>,
    pub notes: Vec<String>,
}

/// One boundary of the comparison battery: `[1, 2, 3, 4]`.
fn comparison_family(profile: &ScaleProfile, boundary: Boundary, c: &RealFn, w: &RealFn) -> [Condition; 4] {
    let limit = profile.limit(boundary);
    let first = Condition {
        holds: limit.diverges(),
        evidence: Some(limit.evidence.clone()),
    };
    let fixed = |t: Tri| Condition {
        holds: t,
        evidence: None,
    };
    match limit.diverges() {
        Tri::Yes => [first, fixed(Tri::No), fixed(Tri::No), fixed(Tri::No)],
        Tri::Inconclusive => [first, fixed(Tri::Inconclusive), fixed(Tri::Inconclusive), fixed(Tri::Inconclusive)],
        Tri::No => {
            let second = profile.tail_weight_verdict(boundary, &|r| 1.0 / c(r));
            let weighted: IntegrabilityVerdict = profile.tail_weight_verdict(boundary, &|r| w(r) / c(r));
            let converges = weighted.converges();
            [
                first,
                Condition {
                    holds: second.diverges(),
                    evidence: Some(second),
                },
                Condition {
                    holds: converges.not(),
                    evidence: Some(weighted.clone()),
                },
                Condition {
                    holds: converges,
                    evidence: Some(weighted),
                },
            ]
        }
    }
}

/// Comparison test with user envelopes: divergence of `H` (part i) or
/// finiteness of `H` (part ii), decided on the one-dimensional envelope
/// diffusion with drift `v` and diffusion coefficient `<x, c x>` as a
/// function of `r`.
pub fn khasminskii_test(field: &CoefficientField, env: &EnvelopePair, cfg: &RadialConfig) -> Result<KhasminskiiVerdict, RadialError> {
    require_multi(field)?;
    let envelopes = verify_envelopes(field, env, cfg)?;
    let mut notes = vec![BOUNDARY_READING_NOTE.to_string()];
    if !envelopes.passed {
        notes.push("envelope inequalities fail, so no comparison applies".into());
        return Ok(KhasminskiiVerdict {
            kind: KhasminskiiKind::Inconclusive,
            matched_case: None,
            envelopes,
            conditions: None,
            notes,
        });
    }
    let dirs = unit_directions(field.dimension(), cfg.directions.max(2), cfg.direction_seed);
    check_radial(field, cfg, &dirs, &[0])?;
    let shared = Arc::new(field.clone());
    let c_tilde: RealFn = {
        let (field, u) = (shared.clone(), dirs[0].clone());
        real_fn(move |r: f64| {
            if !(r > 0.0) {
                return f64::NAN;
            }
            c_hat_at(&field, &scaled(&u, (2.0 * r).sqrt())).unwrap_or(f64::NAN)
        })
    };
    let v_env = env.v.clone();
    let w_env = env.w.clone();
    let v: RealFn = real_fn(move |r| v_env.eval1(r).unwrap_or(f64::NAN));
    let w: RealFn = real_fn(move |r| w_env.eval1(r).unwrap_or(f64::NAN));
    let profile = build_scale(v, c_tilde.clone(), Domain::PositiveHalfLine, &cfg.classify.quad)?;
    let [p1, p2, p3, p4] = comparison_family(&profile, Boundary::Upper, &c_tilde, &w);
    let [m1, m2, m3, m4] = comparison_family(&profile, Boundary::Lower, &c_tilde, &w);
    let cases: Vec<(&str, Tri)> = match env.direction {
        EnvelopeDirection::UpperForDivergence => vec![
            ("i.a", p1.holds.and(m1.holds)),
            ("i.b", p3.holds.and(m1.holds)),
            ("i.c", Tri::all([p1.holds, m2.holds, m3.holds])),
            ("i.d", Tri::all([p3.holds, m2.holds, m3.holds])),
        ],
        EnvelopeDirection::LowerForConvergence => vec![
            ("ii.a", p4.holds.and(m1.holds)),
            ("ii.b", Tri::all([p1.holds, m2.holds, m4.holds])),
            ("ii.c", Tri::all([p4.holds, m2.holds, m4.holds])),
        ],
    };
    let matched = cases.iter().find(|(_, t)| *t == Tri::Yes).map(|(n, _)| n.to_string());
    let kind = match (&matched, env.direction) {
        (Some(_), EnvelopeDirection::UpperForDivergence) => KhasminskiiKind::NotAbsolutelyContinuous,
        (Some(_), EnvelopeDirection::LowerForConvergence) => KhasminskiiKind::AbsolutelyContinuous,
        (None, _) => {
            let undecided = cases.iter().any(|(_, t)| *t == Tri::Inconclusive);
            notes.push(if undecided {
                "some comparison cases could not be decided".into()
            } else {
                "no comparison case applies; the test is sufficient only and says nothing here".into()
            });
            KhasminskiiKind::Inconclusive
        }
    };
    if kind == KhasminskiiKind::AbsolutelyContinuous {
        notes.push("the density of Q* with respect to P is the terminal value of Z".into());
    }
    Ok(KhasminskiiVerdict {
        kind,
        matched_case: matched,
        envelopes,
        conditions: Some(ComparisonConditions {
            plus1: p1,
            plus2: p2,
            plus3: p3,
            plus4: p4,
            minus1: m1,
            minus2: m2,
            minus3: m3,
            minus4: m4,
        }),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::expr;

    fn cfg() -> RadialConfig {
        RadialConfig::default()
    }

    fn inverse_radius_field(mu: f64) -> CoefficientField {
        let beta: Vec<String> = (1..=3).map(|i| format!("{mu}*x{i}/(x1^2+x2^2+x3^2)")).collect();
        let beta: Vec<&str> = beta.iter().map(String::as_str).collect();
        CoefficientField::euclidean_isotropic(&["0", "0", "0"], "1", &beta, &[1.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn reduction_of_inverse_radius_perturbation() {
        let red = radial_reduce(&inverse_radius_field(1.0), &cfg()).unwrap();
        assert!(red.consistency_residual <= 1e-12, "{}", red.consistency_residual);
        for r in [0.01, 1.0, 50.0] {
            assert!(((red.c_hat)(r) - 2.0 * r).abs() <= 1e-12 * r);
            assert!(((red.b_hat)(r) - 2.5).abs() <= 1e-12);
            assert!(((red.f_hat)(r) - 1.0 / (2.0 * r)).abs() <= 1e-12 / r);
        }
    }

    #[test]
    fn anisotropic_diffusion_is_not_radial() {
        let f = CoefficientField::euclidean(&["0", "0"], &[&["1", "0"], &["2"]], &["0", "0"], &[1.0, 0.0]).unwrap();
        assert!(matches!(radial_reduce(&f, &cfg()), Err(RadialError::NotRadial { .. })));
    }

    #[test]
    fn planar_brownian_motion_reduction() {
        let f = CoefficientField::euclidean_isotropic(&["0", "0"], "1", &["0", "0"], &[1.0, 0.0]).unwrap();
        let red = radial_reduce(&f, &cfg()).unwrap();
        assert_eq!((red.b_hat)(3.0), 1.0);
        assert_eq!((red.f_hat)(3.0), 0.0);
    }

    #[test]
    fn inverse_radius_classification() {
        let v = classify_radial(&inverse_radius_field(1.0), &cfg()).unwrap();
        assert_eq!(v.origin_inaccessible, Tri::Yes);
        assert_eq!((v.verdict.local_ac, v.verdict.global_ac), (Tri::Yes, Tri::No), "{:?}", v.verdict.battery);
    }

    #[test]
    fn inward_inverse_radius_is_refused() {
        let err = classify_radial(&inverse_radius_field(-1.0), &cfg()).unwrap_err();
        assert!(matches!(err, RadialError::OriginAccessible { inaccessible: Tri::No, .. }), "{err}");
    }

    #[test]
    fn zero_perturbation_radial() {
        let f = CoefficientField::euclidean_isotropic(&["0", "0", "0"], "1", &["0", "0", "0"], &[1.0, 0.0, 0.0]).unwrap();
        let v = classify_radial(&f, &cfg()).unwrap();
        assert_eq!((v.verdict.local_ac, v.verdict.global_ac), (Tri::Yes, Tri::Yes));
    }

    fn linear_beta_plane() -> CoefficientField {
        CoefficientField::euclidean_isotropic(&["0", "0"], "1", &["x1", "x2"], &[1.0, 0.0]).unwrap()
    }

    #[test]
    fn envelope_checks() {
        let f = linear_beta_plane();
        let env = |w: &str| EnvelopePair {
            v: expr("2*x + 1"),
            w: expr(w),
            direction: EnvelopeDirection::LowerForConvergence,
        };
        assert!(verify_envelopes(&f, &env("2*x"), &cfg()).unwrap().passed);
        assert!(verify_envelopes(&f, &env("3*x"), &cfg()).unwrap().passed);
        let r = verify_envelopes(&f, &env("x"), &cfg()).unwrap();
        assert!(!r.passed && r.witness.is_some());
        let bm = CoefficientField::euclidean_isotropic(&["0", "0"], "1", &["0", "0"], &[1.0, 0.0]).unwrap();
        let zero = EnvelopePair {
            v: expr("1"),
            w: expr("0"),
            direction: EnvelopeDirection::UpperForDivergence,
        };
        assert!(!verify_envelopes(&bm, &zero, &cfg()).unwrap().passed);
    }

    #[test]
    fn khasminskii_divergence_case() {
        let env = EnvelopePair {
            v: expr("5/2"),
            w: expr("1/(2*x)"),
            direction: EnvelopeDirection::UpperForDivergence,
        };
        let k = khasminskii_test(&inverse_radius_field(1.0), &env, &cfg()).unwrap();
        assert_eq!(k.kind, KhasminskiiKind::NotAbsolutelyContinuous, "{k:?}");
        assert_eq!(k.matched_case.as_deref(), Some("i.b"));
    }

    #[test]
    fn khasminskii_convergence_case() {
        // Outward cubic drift with a radial bump: the envelope diffusion
        // explodes fast enough that the bounded weight is integrable.
        let bump = "piecewise(x1^2+x2^2+x3^2 < 1, 1 - (x1^2+x2^2+x3^2), 0)";
        let beta: Vec<String> = (1..=3).map(|i| format!("x{i}*{bump}")).collect();
        let beta: Vec<&str> = beta.iter().map(String::as_str).collect();
        let b: Vec<String> = (1..=3).map(|i| format!("x{i}*(x1^2+x2^2+x3^2)")).collect();
        let b: Vec<&str> = b.iter().map(String::as_str).collect();
        let f = CoefficientField::euclidean_isotropic(&b, "1", &beta, &[0.5, 0.0, 0.0]).unwrap();
        let env = EnvelopePair {
            v: expr("3/2 + 4*x^2"),
            w: expr("1"),
            direction: EnvelopeDirection::LowerForConvergence,
        };
        let k = khasminskii_test(&f, &env, &cfg()).unwrap();
        assert_eq!(k.kind, KhasminskiiKind::AbsolutelyContinuous, "{k:?}");
        assert_eq!(k.matched_case.as_deref(), Some("ii.a"));
    }

    #[test]
    fn inconsistent_envelopes_are_inconclusive() {
        let env = EnvelopePair {
            v: expr("1"),
            w: expr("1/(2*x)"),
            direction: EnvelopeDirection::UpperForDivergence,
        };
        let k = khasminskii_test(&inverse_radius_field(1.0), &env, &cfg()).unwrap();
        assert_eq!(k.kind, KhasminskiiKind::Inconclusive);
    }
}
