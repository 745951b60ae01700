//! Local and global absolute continuity for one-dimensional fields.
//!
//! The scale objects are built from the dominated drift `v = b + c beta`.
//! Each boundary gets three conditions:
//!
//! - `1`: `s` diverges at the boundary;
//! - `2`: `s` converges and `T/c` is not integrable there;
//! - `3`: `s` converges and `T beta^2 = T f/c` is integrable there,
//!
//! with `T` the normalised scale tail of that boundary and `f = <beta, c beta>`.
//! Local absolute continuity needs one condition per boundary; global needs
//! `beta = 0` a.e. or one of `(+3, -1)`, `(+1, -3)`, `(+3, -3)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{CoefficientField, Domain, Expression};
use crate::quad::{improper_integral, integrate, End, IntegrabilityVerdict, QuadConfig, QuadError};
use crate::scale::{build_scale, real_fn, Boundary, RealFn, ScaleError, ScaleProfile};
use crate::Tri;

/// How the third condition of each family is read.
pub const BOUNDARY_READING_NOTE: &str = "third conditions are tested at their own family's boundary \
(plus family at the upper end, minus family at the lower end); the alternative reading that places \
the plus-family weight at the lower end is not used";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyConfig {
    pub quad: QuadConfig,
    /// Interior probes cover `[-grid_radius, grid_radius]` (or `(0, grid_radius]`).
    pub grid_radius: f64,
    pub grid_points: usize,
    /// Extra points checked by the local integrability probes.
    pub suspicious_points: Vec<f64>,
    /// Grid size of the "beta vanishes everywhere" check.
    pub zero_grid_points: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            quad: QuadConfig::default(),
            grid_radius: 20.0,
            grid_points: 201,
            suspicious_points: Vec::new(),
            zero_grid_points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("{0}")]
    Usage(String),
    #[error("time-dependent coefficients are outside the one-dimensional theory")]
    TimeDependent,
    #[error("regularity conditions fail: {0}")]
    Regularity(EsFailure),
    #[error(transparent)]
    Scale(#[from] ScaleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsCheck {
    DiffusionPositive,
    DriftIntegrable,
    BetaSquaredIntegrable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("{check:?} at x = {x}: {detail}")]
pub struct EsFailure {
    pub x: f64,
    pub check: EsCheck,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsReport {
    /// Yes when every probe passed, No at the first decisive failure.
    pub verdict: Tri,
    pub probes: usize,
    pub failure: Option<EsFailure>,
    /// First probe that could not be decided, when the verdict is Inconclusive.
    pub unresolved: Option<EsFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub holds: Tri,
    pub evidence: Option<IntegrabilityVerdict>,
}

impl Condition {
    fn decided(holds: Tri) -> Condition {
        Condition { holds, evidence: None }
    }
}

/// Keys and role labels of the six battery conditions, in report order.
pub const BATTERY_LABELS: [(&str, &str); 6] = [
    ("plus1", "upper: scale diverges"),
    ("plus2", "upper: tail/c not integrable"),
    ("plus3", "upper: tail*f/c integrable"),
    ("minus1", "lower: scale diverges"),
    ("minus2", "lower: tail/c not integrable"),
    ("minus3", "lower: tail*f/c integrable"),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionBattery {
    pub plus1: Condition,
    pub plus2: Condition,
    pub plus3: Condition,
    pub minus1: Condition,
    pub minus2: Condition,
    pub minus3: Condition,
}

impl ConditionBattery {
    pub fn upper(&self) -> Tri {
        Tri::any([self.plus1.holds, self.plus2.holds, self.plus3.holds])
    }

    pub fn lower(&self) -> Tri {
        Tri::any([self.minus1.holds, self.minus2.holds, self.minus3.holds])
    }

    /// Rows in fixed order with role-based labels.
    pub fn rows(&self) -> [(&'static str, &'static str, &Condition); 6] {
        let conds = [&self.plus1, &self.plus2, &self.plus3, &self.minus1, &self.minus2, &self.minus3];
        std::array::from_fn(|i| (BATTERY_LABELS[i].0, BATTERY_LABELS[i].1, conds[i]))
    }
}

/// Verdicts for `Q* << P` locally (Z a martingale) and globally (Z
/// uniformly integrable).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACVerdict {
    pub local_ac: Tri,
    pub global_ac: Tri,
    /// Whether `beta` vanishes almost everywhere.
    pub beta_zero: Tri,
    pub battery: ConditionBattery,
    pub notes: Vec<String>,
}

/// A single tri-state verdict with the battery behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryVerdict {
    pub verdict: Tri,
    pub battery: ConditionBattery,
}

/// Evaluate one family of conditions at `boundary`. `f_over_c` is the
/// weight multiplying the tail in the third condition.
fn family(profile: &ScaleProfile, boundary: Boundary, f_over_c: &dyn Fn(f64) -> f64, weight_is_zero: bool) -> [Condition; 3] {
    let limit = profile.limit(boundary);
    let first = Condition {
        holds: limit.diverges(),
        evidence: Some(limit.evidence.clone()),
    };
    match limit.diverges() {
        Tri::Yes => [first, Condition::decided(Tri::No), Condition::decided(Tri::No)],
        Tri::Inconclusive => [
            first,
            Condition::decided(Tri::Inconclusive),
            Condition::decided(Tri::Inconclusive),
        ],
        Tri::No => {
            let second = profile.tail_weight_verdict(boundary, &|x| 1.0 / profile.c(x));
            let third = if weight_is_zero {
                IntegrabilityVerdict::Converges {
                    value: 0.0,
                    err: 0.0,
                    windows: 0,
                }
            } else {
                profile.tail_weight_verdict(boundary, f_over_c)
            };
            [
                first,
                Condition {
                    holds: second.diverges(),
                    evidence: Some(second),
                },
                Condition {
                    holds: third.converges(),
                    evidence: Some(third),
                },
            ]
        }
    }
}

/// The six conditions from a prebuilt profile.
pub fn battery_from_profile(profile: &ScaleProfile, f_over_c: &dyn Fn(f64) -> f64, weight_is_zero: bool) -> ConditionBattery {
    let [plus1, plus2, plus3] = family(profile, Boundary::Upper, f_over_c, weight_is_zero);
    let [minus1, minus2, minus3] = family(profile, Boundary::Lower, f_over_c, weight_is_zero);
    ConditionBattery {
        plus1,
        plus2,
        plus3,
        minus1,
        minus2,
        minus3,
    }
}

/// Local and global verdicts from a battery and the `beta = 0` disjunct.
pub fn verdicts(battery: &ConditionBattery, beta_zero: Tri) -> (Tri, Tri) {
    let b = battery;
    let local = beta_zero.or(b.upper().and(b.lower()));
    let global = Tri::any([
        beta_zero,
        b.plus3.holds.and(b.minus1.holds),
        b.plus1.holds.and(b.minus3.holds),
        b.plus3.holds.and(b.minus3.holds),
    ]);
    (local, global)
}

fn expr_fn(e: &Expression) -> RealFn {
    let e = e.clone();
    real_fn(move |x| e.eval1(x).unwrap_or(f64::NAN))
}

fn grid(domain: Domain, radius: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    match domain {
        Domain::PositiveHalfLine => (1..=n).map(|k| radius * k as f64 / n as f64).collect(),
        _ => (0..n).map(|k| -radius + 2.0 * radius * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Whether a nonnegative-valued `beta` vanishes almost everywhere: Yes when
/// syntactically zero or zero on the whole grid, No when `beta^2` has a
/// decisively positive integral next to a grid point where it is nonzero.
pub fn beta_zero_verdict(
    beta: &dyn Fn(f64) -> f64,
    syntactic_zero: bool,
    domain: Domain,
    cfg: &ClassifyConfig,
) -> Tri {
    if syntactic_zero {
        return Tri::Yes;
    }
    let pts = grid(domain, cfg.grid_radius, cfg.zero_grid_points);
    let spacing = cfg.grid_radius / cfg.zero_grid_points.max(1) as f64;
    let mut all_zero = true;
    for &x in &pts {
        let v = beta(x);
        if v == 0.0 {
            continue;
        }
        all_zero = false;
        if !v.is_finite() {
            continue;
        }
        let (a, b) = match domain {
            Domain::PositiveHalfLine => (x - 0.5 * spacing.min(x), x + spacing),
            _ => (x - spacing, x + spacing),
        };
        if let Ok(q) = integrate(&|y| beta(y).powi(2), a, b, &cfg.quad) {
            if q.value > 0.0 && q.value > 2.0 * q.err {
                return Tri::No;
            }
        }
    }
    if all_zero {
        Tri::Yes
    } else {
        Tri::Inconclusive
    }
}

/// Two-sided local integrability of `f` at `z`: windows shrink toward `z`
/// from `z - h` and `z + h`.
fn two_sided(f: &dyn Fn(f64) -> f64, z: f64, h: f64, cfg: &QuadConfig, left: bool) -> Tri {
    let mut out = Tri::Yes;
    let sides: &[f64] = if left { &[-1.0, 1.0] } else { &[1.0] };
    for &side in sides {
        let end = End::Point { z, min_gap: 0.0 };
        let v = improper_integral(&|y| f(y).abs(), z + side * h, end, cfg);
        out = out.and(v.converges());
    }
    out
}

/// Local integrability of `f` on `[x - h, x + h]`, localising any trouble.
fn window_integrable(f: &dyn Fn(f64) -> f64, x: f64, h: f64, lower_limit: Option<f64>, cfg: &QuadConfig) -> (Tri, f64) {
    let a = match lower_limit {
        Some(l) => (x - h).max(l + 0.5 * (x - l)),
        None => x - h,
    };
    match integrate(&|y| f(y).abs(), a, x + h, cfg) {
        Ok(_) => (Tri::Yes, x),
        Err(QuadError::NonFinite { x: at, .. }) | Err(QuadError::DepthExhausted { at, .. }) => {
            let reach = (at - a).min(x + h - at).max(1e-9 * h);
            let left_ok = lower_limit.is_none_or(|l| at - reach > l);
            (two_sided(f, at, reach, cfg, left_ok), at)
        }
        Err(_) => (Tri::Inconclusive, x),
    }
}

/// Regularity of a one-dimensional field on a probe grid: `c > 0`,
/// `(1 + |b| + |b + c beta|)/c` and `beta^2` locally integrable.
pub fn validate_engelbert_schmidt(field: &CoefficientField, cfg: &ClassifyConfig) -> Result<EsReport, ClassifyError> {
    require_one_dimensional(field)?;
    let domain = field.domain();
    let b = expr_fn(&field.b()[0]);
    let c = expr_fn(field.c_entry(0, 0));
    let beta = expr_fn(&field.beta()[0]);
    let drift_weight = {
        let (b, c, beta) = (b.clone(), c.clone(), beta.clone());
        move |x: f64| {
            let (bv, cv, be) = (b(x), c(x), beta(x));
            (1.0 + bv.abs() + (bv + cv * be).abs()) / cv
        }
    };
    let beta_sq = {
        let beta = beta.clone();
        move |x: f64| beta(x).powi(2)
    };
    let mut pts = grid(domain, cfg.grid_radius, cfg.grid_points);
    let h = match domain {
        Domain::PositiveHalfLine => 0.5 * cfg.grid_radius / cfg.grid_points.max(1) as f64,
        _ => cfg.grid_radius / (cfg.grid_points.max(2) - 1) as f64,
    };
    pts.extend(cfg.suspicious_points.iter().copied());
    let lower_limit = (domain == Domain::PositiveHalfLine).then_some(0.0);
    let mut report = EsReport {
        verdict: Tri::Yes,
        probes: pts.len(),
        failure: None,
        unresolved: None,
    };
    let quad = &cfg.quad;
    for &x in &pts {
        if lower_limit.is_some_and(|l| x <= l) {
            continue;
        }
        let cv = c(x);
        if !(cv > 0.0) || !cv.is_finite() {
            report.verdict = Tri::No;
            report.failure = Some(EsFailure {
                x,
                check: EsCheck::DiffusionPositive,
                detail: format!("c = {cv}"),
            });
            return Ok(report);
        }
        let checks: [(EsCheck, &dyn Fn(f64) -> f64); 2] =
            [(EsCheck::BetaSquaredIntegrable, &beta_sq), (EsCheck::DriftIntegrable, &drift_weight)];
        for (check, f) in checks {
            let (t, at) = window_integrable(f, x, h, lower_limit, quad);
            match t {
                Tri::Yes => {}
                Tri::No => {
                    report.verdict = Tri::No;
                    report.failure = Some(EsFailure {
                        x: at,
                        check,
                        detail: "not locally integrable".into(),
                    });
                    return Ok(report);
                }
                Tri::Inconclusive => {
                    report.verdict = Tri::Inconclusive;
                    if report.unresolved.is_none() {
                        report.unresolved = Some(EsFailure {
                            x: at,
                            check,
                            detail: "local integrability undecided".into(),
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

fn require_one_dimensional(field: &CoefficientField) -> Result<(), ClassifyError> {
    if field.dimension() != 1 || field.domain() == Domain::Euclidean {
        return Err(ClassifyError::Usage(
            "one-dimensional classification needs d = 1 on the real line or the half-line".into(),
        ));
    }
    if field.is_time_dependent() {
        return Err(ClassifyError::TimeDependent);
    }
    Ok(())
}

/// Battery for a one-dimensional field, built from `v = b + c beta`.
pub fn condition_battery(field: &CoefficientField, cfg: &ClassifyConfig) -> Result<ConditionBattery, ClassifyError> {
    Ok(classify(field, cfg)?.battery)
}

/// Full classification: regularity check, battery, local and global verdicts.
pub fn classify(field: &CoefficientField, cfg: &ClassifyConfig) -> Result<ACVerdict, ClassifyError> {
    require_one_dimensional(field)?;
    let es = validate_engelbert_schmidt(field, cfg)?;
    if let Some(f) = es.failure {
        return Err(ClassifyError::Regularity(f));
    }
    let mut notes = vec![BOUNDARY_READING_NOTE.to_string()];
    if let Some(u) = &es.unresolved {
        notes.push(format!("regularity probe undecided: {u}"));
    }
    let v = expr_fn(&field.dominated_drift()[0]);
    let c = expr_fn(field.c_entry(0, 0));
    let beta = expr_fn(&field.beta()[0]);
    let profile = build_scale(v, c, field.domain(), &cfg.quad)?;
    let zero = field.beta_is_syntactically_zero();
    let battery = battery_from_profile(&profile, &|x| beta(x).powi(2), zero);
    let beta_zero = beta_zero_verdict(&*beta, zero, field.domain(), cfg);
    let (local_ac, global_ac) = verdicts(&battery, beta_zero);
    if beta_zero == Tri::Yes {
        notes.push("beta vanishes everywhere on the probe grid, so both verdicts hold trivially".into());
    }
    Ok(ACVerdict {
        local_ac,
        global_ac,
        beta_zero,
        battery,
        notes,
    })
}

/// `Q* <<_loc P`, i.e. `Z` is a true martingale.
pub fn classify_local(field: &CoefficientField, cfg: &ClassifyConfig) -> Result<BatteryVerdict, ClassifyError> {
    let v = classify(field, cfg)?;
    Ok(BatteryVerdict {
        verdict: v.local_ac,
        battery: v.battery,
    })
}

/// `Q* << P`, i.e. `Z` is uniformly integrable.
pub fn classify_global(field: &CoefficientField, cfg: &ClassifyConfig) -> Result<BatteryVerdict, ClassifyError> {
    let v = classify(field, cfg)?;
    Ok(BatteryVerdict {
        verdict: v.global_ac,
        battery: v.battery,
    })
}

/// `P <<_loc Q*`: the local verdict with the roles of the two laws swapped.
pub fn classify_reverse(field: &CoefficientField, cfg: &ClassifyConfig) -> Result<BatteryVerdict, ClassifyError> {
    classify_local(&field.swapped(), cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    /// Points where `f/c` is decisively not locally integrable.
    pub flagged: Vec<f64>,
    pub undecided: Vec<f64>,
}

/// Flag grid points at which `f/c` fails two-sided local integrability,
/// using windows shrinking geometrically toward each point.
pub fn singularity_set_probe(
    f: &dyn Fn(f64) -> f64,
    c: &dyn Fn(f64) -> f64,
    grid: &[f64],
    cfg: &QuadConfig,
) -> SingularityReport {
    let ratio = |x: f64| f(x) / c(x);
    let mut sorted: Vec<f64> = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut report = SingularityReport {
        flagged: Vec::new(),
        undecided: Vec::new(),
    };
    for &z in grid {
        let gap = sorted
            .iter()
            .filter(|&&y| y != z)
            .map(|y| (y - z).abs())
            .fold(2.0f64, f64::min);
        match two_sided(&ratio, z, 0.5 * gap, cfg, true) {
            Tri::Yes => {}
            Tri::No => report.flagged.push(z),
            Tri::Inconclusive => report.undecided.push(z),
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(b: &str, c: &str, beta: &str) -> CoefficientField {
        CoefficientField::one_dimensional(Domain::RealLine, b, c, beta, 0.0).unwrap()
    }

    fn cfg() -> ClassifyConfig {
        ClassifyConfig::default()
    }

    #[test]
    fn regularity_examples() {
        assert_eq!(validate_engelbert_schmidt(&field("0", "1", "1"), &cfg()).unwrap().verdict, Tri::Yes);
        let r = validate_engelbert_schmidt(&field("0", "1", "1/x"), &cfg()).unwrap();
        assert_eq!(r.verdict, Tri::No);
        let fail = r.failure.unwrap();
        assert_eq!(fail.x, 0.0);
        assert_eq!(fail.check, EsCheck::BetaSquaredIntegrable);
        let vanishing = CoefficientField::one_dimensional(Domain::RealLine, "0", "x^2", "0", 1.0).unwrap();
        let r = validate_engelbert_schmidt(&vanishing, &cfg()).unwrap();
        assert_eq!(r.failure.unwrap().check, EsCheck::DiffusionPositive);
    }

    #[test]
    fn drifted_brownian_battery() {
        let v = classify(&field("0", "1", "1"), &cfg()).unwrap();
        let b = &v.battery;
        assert_eq!(
            [b.plus1.holds, b.plus2.holds, b.plus3.holds, b.minus1.holds],
            [Tri::No, Tri::Yes, Tri::No, Tri::Yes]
        );
        assert_eq!((v.local_ac, v.global_ac), (Tri::Yes, Tri::No));
    }

    #[test]
    fn zero_perturbation() {
        let v = classify(&field("x", "1", "0"), &cfg()).unwrap();
        assert_eq!((v.local_ac, v.global_ac, v.beta_zero), (Tri::Yes, Tri::Yes, Tri::Yes));
    }

    #[test]
    fn cubic_perturbation_is_strict() {
        let v = classify(&field("0", "1", "x^3"), &cfg()).unwrap();
        let b = &v.battery;
        assert_eq!([b.plus1.holds, b.plus2.holds, b.plus3.holds], [Tri::No, Tri::No, Tri::No]);
        assert_eq!(v.local_ac, Tri::No);
        assert_eq!(v.global_ac, Tri::No);
    }

    #[test]
    fn compact_perturbation_with_explosive_drift_is_global() {
        // v = x^3 near both ends: s converges at both ends and the compact
        // weight is integrable, so the pair (+3, -3) holds.
        let v = classify(&field("x^3", "1", "piecewise(x^2 < 1, 1 - x^2, 0)"), &cfg()).unwrap();
        assert_eq!(v.battery.plus3.holds, Tri::Yes, "{:?}", v.battery);
        assert_eq!(v.battery.minus3.holds, Tri::Yes);
        assert_eq!((v.local_ac, v.global_ac), (Tri::Yes, Tri::Yes));
    }

    #[test]
    fn inward_drift_with_compact_perturbation_is_recurrent_and_not_global() {
        let v = classify(&field("-x^3", "1", "piecewise(x^2 < 1, 1 - x^2, 0)"), &cfg()).unwrap();
        assert_eq!((v.local_ac, v.global_ac), (Tri::Yes, Tri::No));
    }

    #[test]
    fn reverse_direction() {
        assert_eq!(classify_reverse(&field("0", "1", "1"), &cfg()).unwrap().verdict, Tri::Yes);
        assert_eq!(classify_reverse(&field("0", "1", "0"), &cfg()).unwrap().verdict, Tri::Yes);
    }

    #[test]
    fn singularity_probe_examples() {
        let q = QuadConfig::default();
        let grid = [-1.0, 0.0, 1.0];
        assert!(singularity_set_probe(&|_| 1.0, &|_| 1.0, &grid, &q).flagged.is_empty());
        assert_eq!(singularity_set_probe(&|x| 1.0 / (x * x), &|_| 1.0, &grid, &q).flagged, vec![0.0]);
        let r = singularity_set_probe(&|x: f64| x.abs().powf(-0.5), &|_| 1.0, &grid, &q);
        assert!(r.flagged.is_empty() && r.undecided.is_empty(), "{r:?}");
    }

    #[test]
    fn hierarchy_holds_on_small_corpus() {
        for (b, beta) in [("0", "1"), ("x^3", "1"), ("-x", "x"), ("0", "sign(x)")] {
            let v = classify(&field(b, "1", beta), &cfg()).unwrap();
            if v.global_ac == Tri::Yes {
                assert_eq!(v.local_ac, Tri::Yes, "{b} {beta}");
            }
        }
    }
}
