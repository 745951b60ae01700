//! Adaptive quadrature with explicit divergence detection.
//!
//! Every local-integrability question in the crate goes through
//! [`improper_integral`]: the integral is split into nested windows that grow
//! geometrically toward an infinite end (or shrink toward a finite singular
//! end), and the sequence of window contributions decides between
//! convergence, divergence and an honest "inconclusive".
//!
//! Integrands are plain `Fn(f64) -> f64`; a failed evaluation is signalled by
//! returning NaN.

mod cheb;
mod gk;
mod improper;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cheb::{cached_antiderivative, Antiderivative};
pub use gk::integrate;
pub use improper::{improper_integral, improper_integral_scaled, l1loc_verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Ratio between consecutive window widths, in (0, 1).
    pub window_base: f64,
    pub n_windows: u32,
    /// Blow-up threshold relative to the first nonzero window.
    pub divergence_factor: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_depth: 50,
            window_base: 0.5,
            n_windows: 40,
            divergence_factor: 1e6,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<(), QuadError> {
        let bad = |what: &str| Err(QuadError::InvalidConfig(what.to_string()));
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_depth == 0 || self.n_windows < 4 {
            return bad("max_depth must be positive and n_windows at least 4");
        }
        if !(self.window_base > 0.0 && self.window_base < 1.0) {
            return bad("window_base must lie in (0, 1)");
        }
        if !(self.divergence_factor > 1.0) {
            return bad("divergence_factor must exceed 1");
        }
        Ok(())
    }

    /// A copy with both tolerances scaled (used for nested integrals).
    pub fn tightened(&self, factor: f64) -> QuadConfig {
        QuadConfig {
            rel_tol: (self.rel_tol * factor).max(1e-14),
            abs_tol: (self.abs_tol * factor).max(1e-300),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("non-finite integrand value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error("subdivision limit reached near x = {at} (estimate {value}, error {err})")]
    DepthExhausted { value: f64, err: f64, at: f64 },
    #[error("integrand is negative ({value}) at x = {x}")]
    NegativeIntegrand { x: f64, value: f64 },
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),
    #[error("antiderivative undefined near knot {knot}")]
    Singular { knot: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub err: f64,
    pub evaluations: usize,
}

/// The end of an improper integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    PlusInfinity,
    MinusInfinity,
    /// A finite, possibly singular point. Windows stop once they come closer
    /// to `z` than `min_gap`.
    Point { z: f64, min_gap: f64 },
}

impl End {
    /// The origin approached from the right, never probed below `1e-9`.
    pub fn zero_plus() -> End {
        End::Point {
            z: 0.0,
            min_gap: ZERO_FLOOR,
        }
    }
}

/// Closest approach to the origin for boundary probes on the half-line.
pub const ZERO_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceRule {
    /// Partial sums grew past `divergence_factor` times the first window
    /// while window contributions kept growing.
    BlowUp,
    /// Window contributions stopped shrinking (ratio of consecutive windows
    /// at least 0.999 over the final windows), as for logarithmic divergence.
    NonDecayingTail,
    /// The integrand overflowed to `+inf`.
    Overflow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntegrabilityVerdict {
    Converges {
        value: f64,
        err: f64,
        windows: usize,
    },
    Diverges {
        rule: DivergenceRule,
        partial_sums: Vec<f64>,
    },
    Inconclusive {
        diagnostic: String,
        partial_sums: Vec<f64>,
    },
}

impl IntegrabilityVerdict {
    pub fn converges(&self) -> crate::Tri {
        match self {
            IntegrabilityVerdict::Converges { .. } => crate::Tri::Yes,
            IntegrabilityVerdict::Diverges { .. } => crate::Tri::No,
            IntegrabilityVerdict::Inconclusive { .. } => crate::Tri::Inconclusive,
        }
    }

    pub fn diverges(&self) -> crate::Tri {
        self.converges().not()
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            IntegrabilityVerdict::Converges { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn inconclusive(diagnostic: impl Into<String>) -> IntegrabilityVerdict {
        IntegrabilityVerdict::Inconclusive {
            diagnostic: diagnostic.into(),
            partial_sums: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> QuadConfig {
        QuadConfig::default()
    }

    #[test]
    fn closed_form_definite_integrals() {
        let q = integrate(&|x: f64| x * x, 0.0, 1.0, &cfg()).unwrap();
        assert!((q.value - 1.0 / 3.0).abs() < 1e-12);
        let q = integrate(&|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &cfg()).unwrap();
        assert!((q.value - 2.0).abs() <= 2e-8, "{q:?}");
        let q = integrate(&|x: f64| (-x).exp(), 0.0, 10.0, &cfg()).unwrap();
        assert!((q.value - (1.0 - (-10.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn interior_failure_names_the_point() {
        let err = integrate(&|x: f64| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &cfg()).unwrap_err();
        assert!(matches!(err, QuadError::NonFinite { x, .. } if x > 0.5));
    }

    #[test]
    fn improper_examples() {
        let v = improper_integral(&|y: f64| (-2.0 * y).exp(), 0.0, End::PlusInfinity, &cfg());
        assert!((v.value().unwrap() - 0.5).abs() < 1e-8, "{v:?}");
        let v = improper_integral(&|x: f64| 1.0 / x, 1.0, End::zero_plus(), &cfg());
        assert!(matches!(v, IntegrabilityVerdict::Diverges { .. }), "{v:?}");
        for end in [End::PlusInfinity, End::MinusInfinity, End::zero_plus()] {
            let v = improper_integral(&|_x: f64| 0.0, 1.0, end, &cfg());
            assert_eq!(v.value(), Some(0.0), "{v:?}");
        }
    }

    #[test]
    fn l1loc_examples() {
        let c = cfg();
        let v = l1loc_verdict(&|_x: f64| 1.0, End::PlusInfinity, 0.0, &c).unwrap();
        assert_eq!(v.converges(), crate::Tri::No);
        let v = l1loc_verdict(&|x: f64| 1.0 / (x * x), End::PlusInfinity, 1.0, &c).unwrap();
        assert!((v.value().unwrap() - 1.0).abs() < 1e-8, "{v:?}");
        let v = l1loc_verdict(&|x: f64| 1.0 / x.sqrt(), End::zero_plus(), 1.0, &c).unwrap();
        assert!((v.value().unwrap() - 2.0).abs() < 1e-7, "{v:?}");
        let err = l1loc_verdict(&|x: f64| x.sin(), End::PlusInfinity, 0.0, &c).unwrap_err();
        assert!(matches!(err, QuadError::NegativeIntegrand { .. }));
    }

    #[test]
    #[allow(clippy::type_complexity)]
    fn textbook_battery() {
        let c = cfg();
        let convergent: [(&dyn Fn(f64) -> f64, f64, End, f64); 5] = [
            (&|y: f64| (-2.0 * y).exp(), 0.0, End::PlusInfinity, 0.5),
            (&|x: f64| 1.0 / (x * x), 1.0, End::PlusInfinity, 1.0),
            (&|x: f64| 1.0 / x.sqrt(), 1.0, End::zero_plus(), 2.0),
            (&|x: f64| 1.0 / (1.0 + x * x), 0.0, End::PlusInfinity, std::f64::consts::FRAC_PI_2),
            (&|x: f64| x.exp(), 0.0, End::MinusInfinity, 1.0),
        ];
        for (i, (f, from, end, exact)) in convergent.iter().enumerate() {
            let v = improper_integral(f, *from, *end, &c);
            let got = v.value().unwrap_or_else(|| panic!("case {i}: {v:?}"));
            assert!((got - exact).abs() <= 1e-6 * exact.abs(), "case {i}: {got} vs {exact}");
        }
        let divergent: [(&dyn Fn(f64) -> f64, f64, End); 5] = [
            (&|x: f64| 1.0 / x, 1.0, End::zero_plus()),
            (&|_x: f64| 1.0, 0.0, End::PlusInfinity),
            (&|x: f64| 1.0 / x, 1.0, End::PlusInfinity),
            (&|x: f64| 1.0 / (x * x), 1.0, End::zero_plus()),
            (&|x: f64| 1.0 / x.abs().sqrt(), -1.0, End::MinusInfinity),
        ];
        for (i, (f, from, end)) in divergent.iter().enumerate() {
            let v = improper_integral(f, *from, *end, &c);
            assert_eq!(v.converges(), crate::Tri::No, "case {i}: {v:?}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(QuadConfig::default().validate().is_ok());
        let bad = QuadConfig {
            window_base: 1.5,
            ..QuadConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
