//! Cached antiderivatives as piecewise Chebyshev series.
//!
//! The range is cut at the base point, at 0, and at every power of two, so
//! panels are octaves (plus `[-1, 0]` and `[0, 1]` when the range straddles
//! the origin). Each panel samples the integrand at 17 Chebyshev-Lobatto
//! points and is bisected until the trailing coefficients are negligible.
//! The integrated series is stored per panel, and panel increments are summed
//! outward from the base, so `G(base) = 0` exactly.
//!
//! Panels whose integrand cannot be sampled (overflow, domain error) are
//! marked invalid; `G` is NaN there and beyond, as seen from the base.

use super::gk::{WG, XGK};
use super::QuadError;

const DEGREE: usize = 16;
const MAX_SPLITS: u32 = 48;
const COEF_TOL: f64 = 1e-13;

#[derive(Debug, Clone)]
struct Panel {
    lo: f64,
    hi: f64,
    /// Chebyshev coefficients of the local antiderivative on `[lo, hi]`,
    /// vanishing at `lo`.
    coef: Vec<f64>,
    /// Chebyshev coefficients of the integrand itself.
    deriv: Vec<f64>,
    total: f64,
    valid: bool,
}

impl Panel {
    fn local(&self, x: f64) -> f64 {
        if x == self.lo {
            return 0.0;
        }
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        clenshaw(&self.coef, t.clamp(-1.0, 1.0))
    }

    /// `int_a^(a+w)` of the fitted integrand (signed `w`) by 10-point
    /// Gauss-Legendre, exact for the degree-16 series. Nodes are placed by
    /// offset from `a`, so tiny `w` keeps full relative accuracy.
    fn signed(&self, a: f64, w: f64) -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        let scale = 2.0 / (self.hi - self.lo);
        let ta = scale * (a - self.lo) - 1.0;
        let half = 0.5 * w;
        let th = scale * half;
        let at = |t: f64| clenshaw(&self.deriv, t.clamp(-1.0, 1.0));
        let mut sum = 0.0;
        for j in 0..5 {
            let dt = th * XGK[2 * j + 1];
            sum += WG[j] * (at(ta + th - dt) + at(ta + th + dt));
        }
        sum * half
    }
}

/// Immutable interpolant `G(x) = int_base^x f`.
#[derive(Debug, Clone)]
pub struct Antiderivative {
    base: f64,
    panels: Vec<Panel>,
    /// `G` at each panel's left end; NaN where undefined.
    prefix: Vec<f64>,
}

fn clenshaw(c: &[f64], t: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + c[0]
}

/// Chebyshev coefficients of `f` on `[lo, hi]` from Lobatto samples, or
/// `None` when a sample is not finite.
fn fit<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Option<Vec<f64>> {
    let n = DEGREE;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut vals = [0.0; DEGREE + 1];
    for (j, v) in vals.iter_mut().enumerate() {
        let t = (std::f64::consts::PI * j as f64 / n as f64).cos();
        let x = if j == 0 {
            hi
        } else if j == n {
            lo
        } else {
            mid + half * t
        };
        let y = f(x);
        if !y.is_finite() {
            return None;
        }
        *v = y;
    }
    let mut a = vec![0.0; n + 1];
    for (k, ak) in a.iter_mut().enumerate() {
        let mut s = 0.5 * (vals[0] + vals[n] * if k % 2 == 0 { 1.0 } else { -1.0 });
        for (j, v) in vals.iter().enumerate().take(n).skip(1) {
            s += v * (std::f64::consts::PI * (j * k) as f64 / n as f64).cos();
        }
        *ak = 2.0 * s / n as f64;
    }
    a[0] *= 0.5;
    a[n] *= 0.5;
    Some(a)
}

fn converged(a: &[f64]) -> bool {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = a.len();
    let tail = a[n - 3..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    tail <= COEF_TOL * scale || scale == 0.0
}

/// Integrate a Chebyshev series on `[lo, hi]`; the result vanishes at `lo`.
fn integrate_series(a: &[f64], half: f64) -> Vec<f64> {
    let n = a.len();
    let at = |k: usize| if k < n { a[k] } else { 0.0 };
    let mut b = vec![0.0; n + 1];
    for (k, bk) in b.iter_mut().enumerate().skip(1) {
        *bk = if k == 1 {
            at(0) - 0.5 * at(2)
        } else {
            (at(k - 1) - at(k + 1)) / (2.0 * k as f64)
        };
        *bk *= half;
    }
    let mut at_left = 0.0;
    for (k, bk) in b.iter().enumerate().skip(1) {
        at_left += if k % 2 == 0 { *bk } else { -*bk };
    }
    b[0] = -at_left;
    b
}

fn make_panel(a: f64, b: f64, coefs: &[f64]) -> Panel {
    let integral = integrate_series(coefs, 0.5 * (b - a));
    let total = clenshaw(&integral, 1.0);
    Panel {
        lo: a,
        hi: b,
        coef: integral,
        deriv: coefs.to_vec(),
        total,
        valid: total.is_finite(),
    }
}

fn invalid_panel(a: f64, b: f64) -> Panel {
    Panel {
        lo: a,
        hi: b,
        coef: vec![0.0],
        deriv: vec![0.0],
        total: f64::NAN,
        valid: false,
    }
}

/// Fit `[lo, hi]` moving away from the base (`outward_right` says which
/// way that is). On failure returns the point where validity ends; the caller
/// then covers the rest of that side with one invalid panel.
fn build_segment<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    outward_right: bool,
    out: &mut Vec<Panel>,
) -> Result<(), f64> {
    let mut stack = vec![(lo, hi, 0u32)];
    while let Some((a, b, depth)) = stack.pop() {
        let mid = 0.5 * (a + b);
        let splittable = depth < MAX_SPLITS && a < mid && mid < b;
        match fit(f, a, b) {
            Some(coefs) if converged(&coefs) || !splittable => {
                let p = make_panel(a, b, &coefs);
                let valid = p.valid;
                out.push(p);
                if !valid {
                    return Err(if outward_right { a } else { b });
                }
            }
            None if !splittable => return Err(if outward_right { a } else { b }),
            _ => {
                // The half nearer the base is processed first.
                if outward_right {
                    stack.push((mid, b, depth + 1));
                    stack.push((a, mid, depth + 1));
                } else {
                    stack.push((a, mid, depth + 1));
                    stack.push((mid, b, depth + 1));
                }
            }
        }
    }
    Ok(())
}

/// Breakpoints: the ends, the base, 0 and powers of two inside the range.
/// Ranges straddling 0 use only powers of two of magnitude at least 1.
fn breakpoints(lo: f64, hi: f64, base: f64) -> Vec<f64> {
    let mut pts = vec![lo, hi, base];
    let straddles = lo < 0.0 && hi > 0.0;
    if straddles {
        pts.push(0.0);
    }
    for e in -1074i32..=1023 {
        let p = 2f64.powi(e);
        if p == 0.0 || !p.is_finite() || (straddles && p < 1.0) {
            continue;
        }
        for v in [p, -p] {
            if v > lo && v < hi {
                pts.push(v);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

impl Antiderivative {
    /// Build over `[lo, hi]`, tolerating invalid regions (they evaluate to NaN).
    pub fn build<F: Fn(f64) -> f64>(f: &F, base: f64, lo: f64, hi: f64) -> Antiderivative {
        assert!(lo <= base && base <= hi && lo < hi, "base must lie inside the range");
        let pts = breakpoints(lo, hi, base);
        let split = pts.iter().position(|p| *p == base).expect("base is a breakpoint");
        let mut right = Vec::new();
        for w in pts[split..].windows(2) {
            if let Err(from) = build_segment(f, w[0], w[1], true, &mut right) {
                while right.last().is_some_and(|p| !p.valid || p.lo >= from) {
                    right.pop();
                }
                right.push(invalid_panel(from, hi));
                break;
            }
        }
        let mut left = Vec::new();
        for w in pts[..=split].windows(2).rev() {
            if let Err(to) = build_segment(f, w[0], w[1], false, &mut left) {
                while left.last().is_some_and(|p| !p.valid || p.hi <= to) {
                    left.pop();
                }
                left.push(invalid_panel(lo, to));
                break;
            }
        }
        left.reverse();
        let start = left.len();
        let mut panels = left;
        panels.extend(right);
        let mut prefix = vec![f64::NAN; panels.len()];
        let mut acc = 0.0;
        for (i, p) in panels.iter().enumerate().skip(start) {
            prefix[i] = if p.valid { acc } else { f64::NAN };
            acc += p.total;
        }
        let mut acc = 0.0;
        for i in (0..start).rev() {
            acc -= panels[i].total;
            prefix[i] = if panels[i].valid { acc } else { f64::NAN };
        }
        Antiderivative {
            base,
            panels,
            prefix,
        }
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let first = self.panels.first()?;
        let last = self.panels.last()?;
        if !(x >= first.lo && x <= last.hi) {
            return None;
        }
        let i = self.panels.partition_point(|p| p.hi < x);
        Some(i.min(self.panels.len() - 1))
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn range(&self) -> (f64, f64) {
        (
            self.panels.first().map_or(f64::NAN, |p| p.lo),
            self.panels.last().map_or(f64::NAN, |p| p.hi),
        )
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// `G(x)`; NaN outside the range or in an invalid region.
    pub fn eval(&self, x: f64) -> f64 {
        if x == self.base {
            return 0.0;
        }
        match self.locate(x) {
            Some(i) if self.panels[i].valid => self.prefix[i] + self.panels[i].local(x),
            _ => f64::NAN,
        }
    }

    /// `G(y) - G(x)`, accurate relative to the difference itself.
    pub fn diff(&self, x: f64, y: f64) -> f64 {
        self.increment(x, y - x)
    }

    /// `G(x + u) - G(x)` for a signed offset `u`. Partial panels are
    /// integrated from the fitted integrand by offset, so the result keeps
    /// relative accuracy even when `u` is far below the resolution of `x`.
    pub fn increment(&self, x: f64, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        let (Some(i), Some(j)) = (self.locate(x), self.locate(x + u)) else {
            return f64::NAN;
        };
        let (pi, pj) = (&self.panels[i], &self.panels[j]);
        if !pi.valid || !pj.valid {
            return f64::NAN;
        }
        if i == j {
            return pi.signed(x, u);
        }
        if u > 0.0 {
            let between = if j > i + 1 { self.prefix[j] - self.prefix[i + 1] } else { 0.0 };
            pi.signed(x, pi.hi - x) + between + pj.signed(pj.lo, u - (pj.lo - x))
        } else {
            let between = if i > j + 1 { self.prefix[i] - self.prefix[j + 1] } else { 0.0 };
            pi.signed(x, pi.lo - x) - between + pj.signed(pj.hi, u - (pj.hi - x))
        }
    }
}

/// `G(x) = int_base^x f` on `[lo, hi]`, failing if any panel cannot be built.
pub fn cached_antiderivative<F: Fn(f64) -> f64>(
    f: &F,
    base: f64,
    lo: f64,
    hi: f64,
) -> Result<Antiderivative, QuadError> {
    if !(lo <= base && base <= hi && lo < hi) {
        return Err(QuadError::InvalidInterval { a: lo, b: hi });
    }
    let g = Antiderivative::build(f, base, lo, hi);
    if let Some(p) = g.panels.iter().find(|p| !p.valid) {
        let knot = if p.lo.abs() < p.hi.abs() { p.lo } else { p.hi };
        return Err(QuadError::Singular { knot });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_integration_of_polynomials() {
        let g = cached_antiderivative(&|y: f64| 2.0 * y.powi(3), 0.0, -4.0, 4.0).unwrap();
        assert_eq!(g.eval(0.0), 0.0);
        assert!((g.eval(2.0) - 8.0).abs() < 1e-12);
        assert!((g.eval(-1.5) - 1.5f64.powi(4) / 2.0).abs() < 1e-12);
        assert!((g.diff(1.0, 3.0) - (81.0 - 1.0) / 2.0).abs() < 1e-11);
    }

    #[test]
    fn nearby_differences_keep_relative_accuracy() {
        let g = cached_antiderivative(&|y: f64| 2.0 * y.powi(3), 0.0, 0.0, 8192.0).unwrap();
        let x = 6000.0f64;
        let h = (x + 1e-9) - x;
        let exact = ((x + h).powi(4) - x.powi(4)) / 2.0;
        let approx = 2.0 * x.powi(3) * h + 3.0 * x * x * h * h;
        assert!((g.diff(x, x + h) - approx).abs() <= 1e-12 * exact, "{}", g.diff(x, x + h));
    }

    #[test]
    fn invalid_regions_are_nan() {
        let g = Antiderivative::build(&|y: f64| (y * y).exp(), 0.0, -64.0, 64.0);
        assert!((g.eval(1.0) - 1.462_651_745_907_181_6).abs() < 1e-12);
        assert!(g.eval(40.0).is_nan());
        assert!(g.eval(-40.0).is_nan());
        assert!(cached_antiderivative(&|y: f64| 1.0 / y, 1.0, -1.0, 2.0).is_err());
    }
}
