//! Improper integrals by nested geometric windows.
//!
//! Window `k` toward `+inf` from `a` is `[a + L(r^k - 1), a + L(r^(k+1) - 1)]`
//! with `r = 1 / window_base`; toward a finite point `z` it is the band between
//! `z + (a - z) q^(k+1)` and `z + (a - z) q^k`. After a minimum number of
//! windows the contribution sequence `w_k` is inspected:
//!
//! - Cauchy tail: the last three contributions sum below tolerance.
//! - Geometric tail: the last ratios `w_{k+1}/w_k` are stable and at most
//!   0.95, so the remainder is summed as a geometric series, with the ratio
//!   spread propagated into the error.
//! - Blow-up: partial sums exceed `divergence_factor` times the first nonzero
//!   window while contributions keep growing.
//! - Non-decaying tail: after all windows, the final ratios are all at least
//!   0.999 (catches logarithmic divergence, which never blows up within a
//!   finite window budget).

use std::cell::Cell;

use super::gk::adaptive as integrate;
use super::{DivergenceRule, End, IntegrabilityVerdict, QuadConfig, QuadError};

const MIN_WINDOWS: usize = 12;
const GEOMETRIC_SPAN: usize = 6;
const MAX_GEOMETRIC_RATIO: f64 = 0.95;
const NON_DECAY_SPAN: usize = 8;
const NON_DECAY_RATIO: f64 = 0.999;

/// Improper integral from `from` toward `end`, oriented so that the result is
/// the integral over the region between them taken left to right. The first
/// window has unit length toward an infinite end.
pub fn improper_integral<F: Fn(f64) -> f64>(
    f: &F,
    from: f64,
    end: End,
    cfg: &QuadConfig,
) -> IntegrabilityVerdict {
    improper_integral_scaled(f, from, end, 1.0, cfg)
}

/// As [`improper_integral`] with first-window length `unit` toward an
/// infinite end (ignored for a finite end).
pub fn improper_integral_scaled<F: Fn(f64) -> f64>(
    f: &F,
    from: f64,
    end: End,
    unit: f64,
    cfg: &QuadConfig,
) -> IntegrabilityVerdict {
    if let Err(e) = cfg.validate() {
        return IntegrabilityVerdict::inconclusive(e.to_string());
    }
    if !from.is_finite() || !(unit > 0.0) {
        return IntegrabilityVerdict::inconclusive("invalid starting point or window unit");
    }
    let q = cfg.window_base;
    let r = 1.0 / q;
    let edge = |k: i32| -> f64 {
        match end {
            End::PlusInfinity => from + unit * (r.powi(k) - 1.0),
            End::MinusInfinity => from - unit * (r.powi(k) - 1.0),
            End::Point { z, .. } => z + (from - z) * q.powi(k),
        }
    };
    let total = match end {
        End::Point { z, min_gap } => {
            if from == z {
                return IntegrabilityVerdict::inconclusive("starting point coincides with the end point");
            }
            let mut n = 0usize;
            while n < cfg.n_windows as usize && (edge(n as i32 + 1) - z).abs() >= min_gap {
                n += 1;
            }
            n
        }
        _ => cfg.n_windows as usize,
    };
    if total == 0 {
        return IntegrabilityVerdict::inconclusive("no window fits between the start and the end point");
    }
    let min_windows = MIN_WINDOWS.min(total);
    let window_cfg = cfg.tightened(0.1);

    let mut w: Vec<f64> = Vec::with_capacity(total);
    let mut sums: Vec<f64> = Vec::with_capacity(total);
    let mut quad_err = 0.0;
    let mut sum = 0.0;
    let mut first_nonzero: Option<f64> = None;
    for k in 0..total {
        let (e0, e1) = (edge(k as i32), edge(k as i32 + 1));
        let (a, b) = if e0 < e1 { (e0, e1) } else { (e1, e0) };
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return IntegrabilityVerdict::Inconclusive {
                diagnostic: format!("window {k} collapsed at [{a}, {b}]"),
                partial_sums: sums,
            };
        }
        let piece = match integrate(f, a, b, &window_cfg) {
            Ok(p) => p,
            Err(QuadError::NonFinite { value, .. }) if value.is_infinite() => {
                return IntegrabilityVerdict::Diverges {
                    rule: DivergenceRule::Overflow,
                    partial_sums: sums,
                }
            }
            Err(e) => {
                return IntegrabilityVerdict::Inconclusive {
                    diagnostic: format!("window [{a:e}, {b:e}]: {e}"),
                    partial_sums: sums,
                }
            }
        };
        w.push(piece.value);
        quad_err += piece.err;
        sum += piece.value;
        if !sum.is_finite() {
            return IntegrabilityVerdict::Diverges {
                rule: DivergenceRule::Overflow,
                partial_sums: sums,
            };
        }
        sums.push(sum);
        if first_nonzero.is_none() && piece.value != 0.0 {
            first_nonzero = Some(piece.value.abs());
        }
        if w.len() < min_windows {
            continue;
        }
        let tol = (cfg.rel_tol * sum.abs()).max(cfg.abs_tol);
        let recent: f64 = w.iter().rev().take(3).map(|v| v.abs()).sum();
        if recent + quad_err <= tol {
            return IntegrabilityVerdict::Converges {
                value: sum,
                err: recent + quad_err,
                windows: w.len(),
            };
        }
        if let Some((tail, tail_err)) = geometric_tail(&w) {
            let value = sum + tail;
            let err = tail_err + quad_err;
            if err <= (cfg.rel_tol * value.abs()).max(cfg.abs_tol) {
                return IntegrabilityVerdict::Converges {
                    value,
                    err,
                    windows: w.len(),
                };
            }
        }
        if blows_up(&w, sum, first_nonzero, cfg.divergence_factor) {
            return IntegrabilityVerdict::Diverges {
                rule: DivergenceRule::BlowUp,
                partial_sums: sums,
            };
        }
    }
    if non_decaying(&w) {
        return IntegrabilityVerdict::Diverges {
            rule: DivergenceRule::NonDecayingTail,
            partial_sums: sums,
        };
    }
    let ratios: Vec<String> = w
        .windows(2)
        .rev()
        .take(4)
        .map(|p| if p[0] != 0.0 { format!("{:.4}", p[1] / p[0]) } else { "n/a".into() })
        .collect();
    IntegrabilityVerdict::Inconclusive {
        diagnostic: format!(
            "tail neither Cauchy nor divergent after {} windows (last ratios, newest first: {})",
            w.len(),
            ratios.join(", ")
        ),
        partial_sums: sums,
    }
}

fn same_sign_nonzero(w: &[f64]) -> bool {
    w.iter().all(|v| *v > 0.0) || w.iter().all(|v| *v < 0.0)
}

/// Remainder `w_last * r / (1 - r)` and its error bound, when the final
/// ratios are stable.
fn geometric_tail(w: &[f64]) -> Option<(f64, f64)> {
    if w.len() < GEOMETRIC_SPAN {
        return None;
    }
    let last = &w[w.len() - GEOMETRIC_SPAN..];
    if !same_sign_nonzero(last) {
        return None;
    }
    let ratios: Vec<f64> = last.windows(2).map(|p| p[1] / p[0]).collect();
    let rmin = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let rmax = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = rmax - rmin;
    let hi = rmax + spread;
    if !(rmin > 0.0) || rmax > MAX_GEOMETRIC_RATIO || hi >= 1.0 {
        return None;
    }
    let g = |r: f64| r / (1.0 - r);
    let r = *ratios.last().expect("nonempty");
    let w_last = *last.last().expect("nonempty");
    let tail = w_last * g(r);
    let err = w_last.abs() * (g(hi) - g(rmin)) + 4.0 * f64::EPSILON * tail.abs();
    Some((tail, err))
}

fn blows_up(w: &[f64], sum: f64, first_nonzero: Option<f64>, factor: f64) -> bool {
    let Some(m0) = first_nonzero else {
        return false;
    };
    if w.len() < 4 || !(sum.abs() > factor * m0) {
        return false;
    }
    let last = &w[w.len() - 4..];
    same_sign_nonzero(last) && last.windows(2).all(|p| p[1].abs() >= p[0].abs())
}

fn non_decaying(w: &[f64]) -> bool {
    if w.len() < NON_DECAY_SPAN {
        return false;
    }
    let last = &w[w.len() - NON_DECAY_SPAN..];
    same_sign_nonzero(last) && last.windows(2).all(|p| p[1] / p[0] >= NON_DECAY_RATIO)
}

/// Local integrability of a nonnegative `f` at `boundary`, integrating from
/// `anchor`. A negative sample is a precondition failure.
pub fn l1loc_verdict<F: Fn(f64) -> f64>(
    f: &F,
    boundary: End,
    anchor: f64,
    cfg: &QuadConfig,
) -> Result<IntegrabilityVerdict, QuadError> {
    if let End::Point { z, .. } = boundary {
        if anchor == z {
            return Err(QuadError::InvalidInterval { a: anchor, b: z });
        }
    }
    let negative: Cell<Option<(f64, f64)>> = Cell::new(None);
    let checked = |x: f64| {
        let v = f(x);
        if v < 0.0 && negative.get().is_none() {
            negative.set(Some((x, v)));
        }
        v
    };
    let verdict = improper_integral(&checked, anchor, boundary, cfg);
    if let Some((x, value)) = negative.get() {
        return Err(QuadError::NegativeIntegrand { x, value });
    }
    Ok(verdict)
}
