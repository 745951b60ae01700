//! Scale density, scale function and boundary behaviour of a one-dimensional
//! diffusion with drift `v` and diffusion coefficient `c`.
//!
//! With `G(x) = int_base^x 2v/c`, the scale density is `p = exp(-G)` and the
//! scale function is `s = int_base^x p`. The base is 0 on the real line and 1
//! on the positive half-line. Callers pass the drift of the law whose
//! boundaries matter, so the classifiers hand in `b + c*beta`.
//!
//! Boundary weights use the normalised tails
//! `T+(x) = (s(+inf) - s(x)) / p(x) = int_x^inf p(y)/p(x) dy` and
//! `T-(x) = (s(x) - s(lower)) / p(x)`, each computed directly from the cached
//! `G` so that no large cancellation occurs.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::Domain;
use crate::quad::{
    improper_integral, improper_integral_scaled, l1loc_verdict, Antiderivative, End, IntegrabilityVerdict,
    QuadConfig,
};
use crate::Tri;

/// A real function of one variable; failures are reported as NaN.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Wrap a closure as a [`RealFn`].
pub fn real_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

/// Largest magnitude covered by the cached antiderivatives.
const FAR: f64 = 7.922_816_251_426_434e28; // 2^96
/// Closest approach to the origin covered on the half-line (2^-72).
const NEAR: f64 = 2.117_582_368_135_750_6e-22;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScaleError {
    #[error("diffusion coefficient is not strictly positive at x = {x} (value {value})")]
    NotPositive { x: f64, value: f64 },
    #[error("drift or diffusion coefficient cannot be evaluated at x = {x}")]
    NotEvaluable { x: f64 },
    #[error("2v/c is not integrable next to the base point (trouble near x = {x})")]
    NotIntegrableAtBase { x: f64 },
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Upper,
    Lower,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Upper => "upper",
            Boundary::Lower => "lower",
        })
    }
}

/// An extended real limit of `s`: a value only when the integral converges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimit {
    pub boundary: Boundary,
    /// Signed limit `s(bnd)` when finite.
    pub value: Option<f64>,
    pub evidence: IntegrabilityVerdict,
}

impl BoundaryLimit {
    /// Yes when `|s|` tends to infinity at this boundary.
    pub fn diverges(&self) -> Tri {
        self.evidence.diverges()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryVerdict {
    pub boundary: Boundary,
    pub accessible: Tri,
    /// Divergence of `s` at the boundary.
    pub scale_diverges: Tri,
    /// Local integrability of `T/c` at the boundary, when `s` converges there.
    pub tail_weight: Option<IntegrabilityVerdict>,
}

/// Cached scale objects for one drift and diffusion coefficient.
#[derive(Clone)]
pub struct ScaleProfile {
    domain: Domain,
    base: f64,
    c: RealFn,
    ratio: RealFn,
    g: Antiderivative,
    s: Antiderivative,
    upper: BoundaryLimit,
    lower: BoundaryLimit,
    cfg: QuadConfig,
}

impl fmt::Debug for ScaleProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScaleProfile")
            .field("domain", &self.domain)
            .field("base", &self.base)
            .field("upper", &self.upper)
            .field("lower", &self.lower)
            .finish()
    }
}

/// Probe points for positivity of `c`.
fn probe_grid(domain: Domain) -> Vec<f64> {
    match domain {
        Domain::PositiveHalfLine => {
            let mut g: Vec<f64> = (0..=100).map(|k| 10f64.powf(-6.0 + 0.08 * k as f64)).collect();
            g.extend((1..=200).map(|k| 0.1 * k as f64));
            g
        }
        _ => (0..=200).map(|k| -20.0 + 0.2 * k as f64).collect(),
    }
}

/// Build the profile. `v` and `c` are evaluated pointwise; `c` must be
/// strictly positive on the probe grid.
pub fn build_scale(v: RealFn, c: RealFn, domain: Domain, cfg: &QuadConfig) -> Result<ScaleProfile, ScaleError> {
    cfg.validate().map_err(|e| ScaleError::Usage(e.to_string()))?;
    let (base, lo, hi) = match domain {
        Domain::RealLine => (0.0, -FAR, FAR),
        Domain::PositiveHalfLine => (1.0, NEAR, FAR),
        Domain::Euclidean => {
            return Err(ScaleError::Usage(
                "scale objects need a one-dimensional domain; reduce the field radially first".into(),
            ))
        }
    };
    for x in probe_grid(domain) {
        let cv = c(x);
        if cv.is_nan() || v(x).is_nan() {
            return Err(ScaleError::NotEvaluable { x });
        }
        if !(cv > 0.0) || !cv.is_finite() {
            return Err(ScaleError::NotPositive { x, value: cv });
        }
    }
    let ratio: RealFn = {
        let (v, c) = (v.clone(), c.clone());
        Arc::new(move |x| 2.0 * v(x) / c(x))
    };
    let g = Antiderivative::build(&|x: f64| ratio(x), base, lo, hi);
    for x in [base - 0.5, base - 1e-3, base + 1e-3, base + 0.5] {
        if x > lo && g.eval(x).is_nan() {
            return Err(ScaleError::NotIntegrableAtBase { x });
        }
    }
    let density = |x: f64| (-g.eval(x)).exp();
    let s = Antiderivative::build(&density, base, lo, hi);
    let upper_end = End::PlusInfinity;
    let lower_end = match domain {
        Domain::PositiveHalfLine => End::zero_plus(),
        _ => End::MinusInfinity,
    };
    let limit = |boundary: Boundary, end: End| {
        let evidence = improper_integral(&density, base, end, cfg);
        let value = evidence.value().map(|v| match boundary {
            Boundary::Upper => v,
            Boundary::Lower => -v,
        });
        BoundaryLimit {
            boundary,
            value,
            evidence,
        }
    };
    let upper = limit(Boundary::Upper, upper_end);
    let lower = limit(Boundary::Lower, lower_end);
    Ok(ScaleProfile {
        domain,
        base,
        c,
        ratio,
        g,
        s,
        upper,
        lower,
        cfg: cfg.clone(),
    })
}

impl ScaleProfile {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn config(&self) -> &QuadConfig {
        &self.cfg
    }

    /// `G(x) = int_base^x 2v/c`.
    pub fn g(&self, x: f64) -> f64 {
        self.g.eval(x)
    }

    /// Scale density `p(x) = exp(-G(x))`, with `p(base) = 1` exactly.
    pub fn p(&self, x: f64) -> f64 {
        (-self.g.eval(x)).exp()
    }

    /// Scale function with `s(base) = 0` exactly.
    pub fn s(&self, x: f64) -> f64 {
        self.s.eval(x)
    }

    pub fn c(&self, x: f64) -> f64 {
        (self.c)(x)
    }

    pub fn limit(&self, boundary: Boundary) -> &BoundaryLimit {
        match boundary {
            Boundary::Upper => &self.upper,
            Boundary::Lower => &self.lower,
        }
    }

    pub fn s_upper(&self) -> &BoundaryLimit {
        &self.upper
    }

    pub fn s_lower(&self) -> &BoundaryLimit {
        &self.lower
    }

    /// The improper end of the probe toward `boundary`.
    pub fn end(&self, boundary: Boundary) -> End {
        match (boundary, self.domain) {
            (Boundary::Upper, _) => End::PlusInfinity,
            (Boundary::Lower, Domain::PositiveHalfLine) => End::zero_plus(),
            (Boundary::Lower, _) => End::MinusInfinity,
        }
    }

    /// Normalised tail `T(x) = |s(bnd) - s(x)| / p(x)`, or NaN when the inner
    /// integral is not decisively finite.
    pub fn tail(&self, boundary: Boundary, x: f64) -> f64 {
        let inner = self.cfg.tightened(0.01);
        let verdict = match (boundary, self.domain) {
            // Toward the origin, absolute coordinates are already precise.
            (Boundary::Lower, Domain::PositiveHalfLine) => {
                let integrand = |y: f64| (-self.g.increment(x, y - x)).exp();
                improper_integral(&integrand, x, End::Point { z: 0.0, min_gap: 0.0 }, &inner)
            }
            // Elsewhere integrate over the offset u = y - x so that windows
            // far narrower than the spacing of floats near x stay exact.
            _ => {
                let end = match boundary {
                    Boundary::Upper => End::PlusInfinity,
                    Boundary::Lower => End::MinusInfinity,
                };
                let scale = x.abs().max(1.0);
                let rate = (self.ratio)(x).abs();
                let unit = if rate > 0.0 { (1.0 / rate).clamp(1e-12 * scale, scale) } else { scale };
                let integrand = |u: f64| (-self.g.increment(x, u)).exp();
                improper_integral_scaled(&integrand, 0.0, end, unit, &inner)
            }
        };
        verdict.value().unwrap_or(f64::NAN)
    }

    /// `s(y) - s(x)` without cancellation.
    pub fn s_increment(&self, x: f64, y: f64) -> f64 {
        self.s.diff(x, y)
    }

    /// Local integrability at `boundary` of `T(x) * weight(x)`, integrated
    /// from the base. Only meaningful where `s` converges at `boundary`.
    pub fn tail_weight_verdict(&self, boundary: Boundary, weight: &dyn Fn(f64) -> f64) -> IntegrabilityVerdict {
        let f = |x: f64| {
            let w = weight(x);
            if w == 0.0 {
                return 0.0;
            }
            self.tail(boundary, x) * w
        };
        match l1loc_verdict(&f, self.end(boundary), self.base, &self.cfg) {
            Ok(v) => v,
            Err(e) => IntegrabilityVerdict::inconclusive(e.to_string()),
        }
    }
}

/// Feller's test at one boundary: inaccessible iff `s` diverges there, or `s`
/// converges and `T/c` is not integrable there.
pub fn feller_accessible(profile: &ScaleProfile, boundary: Boundary) -> BoundaryVerdict {
    let scale_diverges = profile.limit(boundary).diverges();
    let (accessible, tail_weight) = match scale_diverges {
        Tri::Yes => (Tri::No, None),
        Tri::Inconclusive => (Tri::Inconclusive, None),
        Tri::No => {
            let w = profile.tail_weight_verdict(boundary, &|x| 1.0 / profile.c(x));
            (w.converges(), Some(w))
        }
    };
    BoundaryVerdict {
        boundary,
        accessible,
        scale_diverges,
        tail_weight,
    }
}

/// Recurrence on the real line: both limits of `s` infinite.
pub fn is_recurrent(profile: &ScaleProfile) -> Result<Tri, ScaleError> {
    if profile.domain != Domain::RealLine {
        return Err(ScaleError::Usage("recurrence is defined here for the real line only".into()));
    }
    Ok(profile.upper.diverges().and(profile.lower.diverges()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(v: impl Fn(f64) -> f64 + Send + Sync + 'static, c: impl Fn(f64) -> f64 + Send + Sync + 'static, domain: Domain) -> ScaleProfile {
        build_scale(real_fn(v), real_fn(c), domain, &QuadConfig::default()).unwrap()
    }

    #[test]
    fn brownian_motion() {
        let pr = profile(|_| 0.0, |_| 1.0, Domain::RealLine);
        assert_eq!(pr.p(pr.base()), 1.0);
        assert_eq!(pr.s(pr.base()), 0.0);
        assert!((pr.s(2.5) - 2.5).abs() < 1e-12);
        assert_eq!(pr.s_upper().diverges(), Tri::Yes);
        assert_eq!(pr.s_lower().diverges(), Tri::Yes);
        assert_eq!(is_recurrent(&pr).unwrap(), Tri::Yes);
        for b in [Boundary::Upper, Boundary::Lower] {
            assert_eq!(feller_accessible(&pr, b).accessible, Tri::No);
        }
    }

    #[test]
    fn drifted_brownian_motion() {
        let pr = profile(|_| 1.0, |_| 1.0, Domain::RealLine);
        assert!((pr.p(1.0) - (-2.0f64).exp()).abs() < 1e-14);
        assert!((pr.s_upper().value.unwrap() - 0.5).abs() < 1e-8);
        assert_eq!(pr.s_lower().diverges(), Tri::Yes);
        assert_eq!(is_recurrent(&pr).unwrap(), Tri::No);
        // T+ is identically 1/2.
        for x in [-3.0, 0.0, 5.0, 40.0, 1e4] {
            assert!((pr.tail(Boundary::Upper, x) - 0.5).abs() < 1e-9, "x = {x}");
        }
        assert_eq!(feller_accessible(&pr, Boundary::Upper).accessible, Tri::No);
    }

    #[test]
    fn cubic_drift_explodes() {
        let pr = profile(|x| x.powi(3), |_| 1.0, Domain::RealLine);
        assert!(pr.s_upper().value.is_some());
        assert!(pr.s_lower().value.is_some());
        let up = feller_accessible(&pr, Boundary::Upper);
        assert_eq!(up.accessible, Tri::Yes, "{up:?}");
    }

    #[test]
    fn reflected_sign_drift_is_recurrent() {
        let pr = profile(|x| -x.signum(), |_| 1.0, Domain::RealLine);
        assert_eq!(is_recurrent(&pr).unwrap(), Tri::Yes);
    }

    #[test]
    fn squared_bessel_origin_is_inaccessible() {
        let pr = profile(|_| 1.5, |y| 2.0 * y, Domain::PositiveHalfLine);
        assert_eq!(pr.p(1.0), 1.0);
        assert!((pr.p(4.0) - 4f64.powf(-1.5)).abs() < 1e-12);
        assert_eq!(pr.s_lower().diverges(), Tri::Yes);
        assert_eq!(feller_accessible(&pr, Boundary::Lower).accessible, Tri::No);
        assert!(is_recurrent(&pr).is_err());
    }

    #[test]
    fn nonpositive_diffusion_is_rejected() {
        let err = build_scale(real_fn(|_| 0.0), real_fn(|x| x * x), Domain::RealLine, &QuadConfig::default());
        assert!(matches!(err, Err(ScaleError::NotPositive { .. })));
    }

    #[test]
    fn scale_is_strictly_increasing() {
        let pr = profile(|x| x.powi(3), |_| 1.0, Domain::RealLine);
        let xs: Vec<f64> = (0..60).map(|k| -3.0 + 0.1 * k as f64).collect();
        for w in xs.windows(2) {
            assert!(pr.s_increment(w[0], w[1]) > 0.0, "{} {}", w[0], w[1]);
        }
    }
}
