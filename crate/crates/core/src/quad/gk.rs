//! Gauss-Kronrod 10/21 rule with global adaptive bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{improper_integral, End, IntegrabilityVerdict, QuadConfig, QuadError, Quadrature};

pub(crate) const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

pub(crate) const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One application of the 21-point rule: `(kronrod, error estimate)`.
pub(crate) fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<(f64, f64), QuadError> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let eval = |x: f64| -> Result<f64, QuadError> {
        let v = f(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QuadError::NonFinite { x, value: v })
        }
    };
    let fc = eval(center)?;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..5 {
        let jt = 2 * j + 1;
        let dx = half * XGK[jt];
        let (f1, f2) = (eval(center - dx)?, eval(center + dx)?);
        fv1[jt] = f1;
        fv2[jt] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jt] * (f1 + f2);
        res_abs += WGK[jt] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jt = 2 * j;
        let dx = half * XGK[jt];
        let (f1, f2) = (eval(center - dx)?, eval(center + dx)?);
        fv1[jt] = f1;
        fv2[jt] = f2;
        res_k += WGK[jt] * (f1 + f2);
        res_abs += WGK[jt] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let raw = ((res_k - res_g) * half).abs();
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = raw;
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok((value, err))
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Hard cap on bisections so a pathological integrand cannot stall a run.
const MAX_PIECES: usize = 4000;

/// Adaptive integration of `f` over `[a, b]`. The integrand reports failure
/// by returning a non-finite value.
///
/// When bisection stalls at an endpoint (an integrable endpoint singularity
/// such as `x^(-1/2)` at 0), the half next to that endpoint is redone with
/// geometric windows shrinking toward it, whose tail is summed in closed form.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<Quadrature, QuadError> {
    match adaptive(f, a, b, cfg) {
        Err(QuadError::DepthExhausted { at, value, err }) => {
            let near = 1e-6 * (b - a);
            let endpoint = if at - a <= near {
                a
            } else if b - at <= near {
                b
            } else {
                return Err(QuadError::DepthExhausted { value, err, at });
            };
            let mid = 0.5 * (a + b);
            let regular = if endpoint == a {
                adaptive(f, mid, b, cfg)?
            } else {
                adaptive(f, a, mid, cfg)?
            };
            let end = End::Point {
                z: endpoint,
                min_gap: 0.0,
            };
            match improper_integral(f, mid, end, cfg) {
                IntegrabilityVerdict::Converges {
                    value: v, err: e, ..
                } => Ok(Quadrature {
                    value: v + regular.value,
                    err: e + regular.err,
                    evaluations: regular.evaluations,
                }),
                _ => Err(QuadError::DepthExhausted { value, err, at }),
            }
        }
        other => other,
    }
}

pub(super) fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    cfg: &QuadConfig,
) -> Result<Quadrature, QuadError> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let (value, err) = gk21(f, a, b)?;
    let mut evaluations = 21usize;
    let mut total = value;
    let mut total_err = err;
    let mut heap = BinaryHeap::new();
    heap.push(Piece {
        a,
        b,
        value,
        err,
        depth: 0,
    });
    loop {
        let target = (cfg.rel_tol * total.abs()).max(cfg.abs_tol);
        if total_err <= target {
            return Ok(Quadrature {
                value: total,
                err: total_err,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        let mid = 0.5 * (worst.a + worst.b);
        if worst.depth >= cfg.max_depth || heap.len() >= MAX_PIECES || !(worst.a < mid && mid < worst.b) {
            return Err(QuadError::DepthExhausted {
                value: total,
                err: total_err,
                at: mid,
            });
        }
        let (v1, e1) = gk21(f, worst.a, mid)?;
        let (v2, e2) = gk21(f, mid, worst.b)?;
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            err: e1,
            depth: worst.depth + 1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            err: e2,
            depth: worst.depth + 1,
        });
        // Recompute from scratch now and then to shed accumulated rounding.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
}
