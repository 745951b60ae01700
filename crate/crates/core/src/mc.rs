//! Euler simulation of the dominating law `P` (drift `b`) or the dominated
//! law `Q*` (drift `b + c beta`) up to an explosion proxy, tracking the
//! density `Z` in exponential form and the energy `H = int <beta, c beta> dt`.
//!
//! Path `i` draws from the ChaCha8 substream `i` of the master seed and the
//! per-path results are reduced in a fixed pairwise tree, so reports do not
//! depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{cholesky_into, CoefficientField, Domain};
use crate::quad::QuadConfig;
use crate::scale::{build_scale, feller_accessible, real_fn, Boundary, ScaleError};
use crate::Tri;

/// Below this value of `|x|^2 / 2` a multi-dimensional path has reached the
/// origin.
pub const ORIGIN_RADIUS: f64 = 1e-9;

/// Substream offset of the `Q*` run inside a transfer check.
const QSTAR_STREAM_OFFSET: u64 = 1 << 40;

pub const FREEZING_NOTE: &str = "after the explosion proxy |x| > r_max or an exit through the origin, \
the path, z and h are frozen at their values at the exit step";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    #[serde(alias = "UnderP")]
    UnderP,
    #[serde(alias = "UnderQstar")]
    UnderQstar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub t_max: f64,
    /// Ball radii whose first crossings are counted.
    pub r_levels: Vec<f64>,
    pub r_max: f64,
    pub seed: u64,
    pub measure: Measure,
    pub h_blowup_threshold: f64,
    /// Functionals are read at `t_max`, or at the exit of this ball (capped
    /// at time equal to the radius) when set.
    pub stop_level: Option<f64>,
    /// Number of leading paths whose trajectories are kept for CSV output.
    pub record_paths: usize,
    pub record_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        let r_max = 1e6;
        SimConfig {
            n_paths: 100_000,
            dt: 1e-3,
            t_max: 1.0,
            r_levels: default_levels(r_max),
            r_max,
            seed: 0,
            measure: Measure::UnderP,
            h_blowup_threshold: 1e3,
            stop_level: None,
            record_paths: 0,
            record_stride: 10,
        }
    }
}

/// Powers of two from 2 up to `r_max`.
pub fn default_levels(r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = 2.0;
    while r < r_max {
        out.push(r);
        r *= 2.0;
    }
    out
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidConfig(m.to_string()));
        if self.n_paths < 2 {
            return bad("n_paths must be at least 2");
        }
        if !(self.dt > 0.0) || !(self.t_max > 0.0) || !(self.dt <= self.t_max) {
            return bad("dt and t_max must be positive with dt <= t_max");
        }
        if !(self.r_max > 0.0) {
            return bad("r_max must be positive");
        }
        if self.r_levels.iter().any(|r| !(*r > 0.0)) || self.r_levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad("r_levels must be positive and increasing");
        }
        if self.r_levels.len() > 64 {
            return bad("at most 64 r_levels");
        }
        if !(self.h_blowup_threshold > 0.0) {
            return bad("h_blowup_threshold must be positive");
        }
        if matches!(self.stop_level, Some(l) if !(l > 0.0)) {
            return bad("stop_level must be positive");
        }
        if self.record_stride == 0 {
            return bad("record_stride must be positive");
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        ((self.t_max / self.dt).round() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),
    #[error("{flagged} of {n_paths} paths met a non-positive-definite or non-evaluable diffusion coefficient (limit 1%)")]
    TooManyFlags { flagged: usize, n_paths: usize },
    #[error("cannot settle the lower boundary policy: {0}")]
    Scale(#[from] ScaleError),
    #[error("cross-validation needs a decisive local verdict, got Inconclusive")]
    Undecided,
}

/// Bounded path maps used by the transfer check. Coordinates refer to `x1`
/// and norms to the Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Functional {
    Constant { value: f64 },
    /// `min(sup_s |X_s|, cap)`.
    SupAbsCapped { cap: f64 },
    /// `1{X_stop > level}`.
    IndicatorAbove { level: f64 },
    /// `X_stop` clamped to `[lo, hi]`.
    ClippedTerminal { lo: f64, hi: f64 },
    /// Fraction of `[0, t_max]` spent below `level` before stopping.
    OccupationBelow { level: f64 },
}

/// Five functionals centred on the start point.
pub fn default_functionals(field: &CoefficientField) -> Vec<Functional> {
    let x0 = field.x0()[0];
    vec![
        Functional::Constant { value: 1.0 },
        Functional::SupAbsCapped {
            cap: x0.abs() + 10.0,
        },
        Functional::IndicatorAbove { level: x0 },
        Functional::ClippedTerminal { lo: x0 - 2.0, hi: x0 + 2.0 },
        Functional::OccupationBelow { level: x0 },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "crate::extended_float")]
    pub mean: f64,
    #[serde(with = "crate::extended_float")]
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    #[serde(with = "crate::extended_float")]
    pub mean_z: f64,
    #[serde(with = "crate::extended_float")]
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub functional: Functional,
    #[serde(with = "crate::extended_float")]
    pub estimate: f64,
    #[serde(with = "crate::extended_float")]
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCrossing {
    pub level: f64,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub q: f64,
    #[serde(with = "crate::extended_float")]
    pub value: f64,
}

/// How a half-line path is treated near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerPolicy {
    /// The simulated law reaches the origin: a step is an exit when it lands
    /// at or below 0 or when a uniform draw falls under the Brownian-bridge
    /// crossing probability.
    Exit,
    /// The simulated law `P` cannot reach the origin but `Q*` can: `z` is
    /// multiplied by the bridge survival probability and set to 0 on landing
    /// at or below 0, which makes the step weight the exact ratio of the
    /// killed `Q*` transition to the `P` transition.
    WeightBySurvival,
    /// Neither law reaches the origin: landing at or below 0 is a
    /// discretisation overshoot; the path is frozen and counted.
    Overshoot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub path: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub z: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub measure: Measure,
    pub seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub t_max: f64,
    pub steps: usize,
    /// Estimate of `E[Z_{t_max}]` under the simulated law.
    pub mean_z: Estimate,
    pub z_checkpoints: Vec<Checkpoint>,
    pub functionals: Vec<FunctionalEstimate>,
    pub explosion_frequency: f64,
    pub lower_exit_frequency: f64,
    /// Paths whose weight was set to 0 by the survival policy.
    pub killed_frequency: f64,
    pub overshoots: usize,
    pub flagged: usize,
    pub crossings: Vec<LevelCrossing>,
    pub h_quantiles: Vec<Quantile>,
    pub h_blowup_threshold: f64,
    pub h_above_threshold: f64,
    /// Smallest `z` over all steps of paths not zeroed by the survival policy.
    #[serde(with = "crate::extended_float")]
    pub min_z: f64,
    /// `h` first reaching each integer `n` overshoots `n` by at most one step.
    pub h_truncation_ok: bool,
    pub lower_policy: Option<LowerPolicy>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub trajectories: Vec<TrajectoryRow>,
}

struct PathOutcome {
    z: f64,
    checkpoints: [f64; 4],
    h: f64,
    exploded: bool,
    lower_exit: bool,
    killed: bool,
    overshoot: bool,
    flagged: bool,
    levels: u64,
    /// Functional values at the stopping time, 0 if the path left before it.
    values: Vec<f64>,
    z_stop: f64,
    min_z: f64,
    h_truncation_ok: bool,
    rows: Vec<TrajectoryRow>,
}

/// Everything a path needs besides its index.
struct Plan<'a> {
    field: &'a CoefficientField,
    cfg: &'a SimConfig,
    functionals: &'a [Functional],
    lower: Option<LowerPolicy>,
    stream_offset: u64,
    steps: usize,
    dt: f64,
}

enum Stop {
    Running,
    Exploded,
    LowerExit,
    Killed,
    Overshoot,
    Flagged,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

impl Plan<'_> {
    fn run_path(&self, index: usize) -> PathOutcome {
        let field = self.field;
        let cfg = self.cfg;
        let d = field.dimension();
        let dt = self.dt;
        let sqrt_dt = dt.sqrt();
        let qstar = cfg.measure == Measure::UnderQstar;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(self.stream_offset + index as u64);

        let mut x = field.x0().to_vec();
        let mut next = vec![0.0; d];
        let mut b = vec![0.0; d];
        let mut beta = vec![0.0; d];
        let mut c = vec![0.0; d * d];
        let mut xi = vec![0.0; d];
        let mut w = vec![0.0; d];
        let mut l = vec![0.0; d * d];

        let (mut z, mut h) = (1.0f64, 0.0f64);
        let mut min_z = 1.0f64;
        let mut h_truncation_ok = true;
        let mut checkpoints = [1.0; 4];
        let checkpoint_steps: [usize; 4] = std::array::from_fn(|k| ((k + 1) * self.steps).div_ceil(4));
        let mut levels = 0u64;
        let mut next_level = 0;
        let mut stop = Stop::Running;

        let stop_time = cfg.stop_level.map_or(cfg.t_max, |l| l.min(cfg.t_max));
        let mut stopped: Option<(Vec<f64>, f64)> = None;
        let mut sup_norm = norm(&x);
        let mut occupation = vec![0.0; self.functionals.len()];
        let mut rows = Vec::new();
        let record = index < cfg.record_paths;
        if record {
            rows.push(TrajectoryRow { path: index, t: 0.0, x: x.clone(), z, h });
        }

        let mut step = 0;
        while step < self.steps {
            let t = step as f64 * dt;
            if stopped.is_none() {
                for (k, f) in self.functionals.iter().enumerate() {
                    if let Functional::OccupationBelow { level } = f {
                        if x[0] < *level {
                            occupation[k] += dt;
                        }
                    }
                }
            }
            let evaluated = field.eval_b(&x, t, &mut b).is_ok()
                && field.eval_beta(&x, t, &mut beta).is_ok()
                && field.eval_c(&x, t, &mut c).is_ok();
            let factored = evaluated && cholesky_into(&c, d, &mut l);
            if !factored || !b.iter().chain(&beta).all(|v| v.is_finite()) {
                stop = Stop::Flagged;
                break;
            }
            for v in xi.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let mut energy = 0.0;
            let mut martingale = 0.0;
            for i in 0..d {
                let mut wi = 0.0;
                for j in 0..=i {
                    wi += l[i * d + j] * xi[j];
                }
                w[i] = wi * sqrt_dt;
                martingale += beta[i] * w[i];
            }
            for i in 0..d {
                let cb: f64 = (0..d).map(|j| c[i * d + j] * beta[j]).sum();
                energy += beta[i] * cb;
                let drift = if qstar { b[i] + cb } else { b[i] };
                next[i] = x[i] + drift * dt + w[i];
            }
            let log_increment = if qstar {
                martingale + 0.5 * energy * dt
            } else {
                martingale - 0.5 * energy * dt
            };
            z *= log_increment.exp();
            let h_old = h;
            h += energy * dt;
            let crossed = h.floor();
            if crossed >= 1.0 && crossed > h_old.floor() && h - crossed > h - h_old {
                h_truncation_ok = false;
            }

            if let Some(policy) = self.lower {
                let (x_old, y) = (x[0], next[0]);
                let p_cross = if y > 0.0 { (-2.0 * x_old * y / (c[0] * dt)).exp() } else { 1.0 };
                match policy {
                    LowerPolicy::Exit => {
                        if y <= 0.0 || rng.random::<f64>() < p_cross {
                            stop = Stop::LowerExit;
                        }
                    }
                    LowerPolicy::WeightBySurvival => {
                        if y <= 0.0 {
                            z = 0.0;
                            stop = Stop::Killed;
                        } else {
                            z *= 1.0 - p_cross;
                        }
                    }
                    LowerPolicy::Overshoot => {
                        if y <= 0.0 {
                            stop = Stop::Overshoot;
                        }
                    }
                }
            }
            step += 1;
            if !matches!(stop, Stop::Running) {
                // An exit freezes the path at its pre-step position.
                if matches!(stop, Stop::Killed) {
                    checkpoints.iter_mut().zip(&checkpoint_steps).for_each(|(v, s)| {
                        if step <= *s {
                            *v = 0.0
                        }
                    });
                }
                break;
            }
            x.copy_from_slice(&next);
            if !matches!(stop, Stop::Killed) && z > 0.0 {
                min_z = min_z.min(z);
            }
            let r = norm(&x);
            if !r.is_finite() || r > cfg.r_max {
                stop = Stop::Exploded;
            } else if d > 1 && 0.5 * r * r < ORIGIN_RADIUS {
                stop = Stop::LowerExit;
            }
            while next_level < cfg.r_levels.len() && r >= cfg.r_levels[next_level] {
                levels |= 1 << next_level;
                next_level += 1;
            }
            if !matches!(stop, Stop::Running) {
                break;
            }
            sup_norm = sup_norm.max(r);
            for (k, s) in checkpoint_steps.iter().enumerate() {
                if step == *s {
                    checkpoints[k] = z;
                }
            }
            let t_now = step as f64 * dt;
            if stopped.is_none() {
                let left_ball = cfg.stop_level.is_some_and(|l| r >= l);
                if left_ball || t_now >= stop_time - 0.5 * dt {
                    stopped = Some((x.clone(), z));
                }
            }
            if record && step % cfg.record_stride == 0 {
                rows.push(TrajectoryRow { path: index, t: t_now, x: x.clone(), z, h });
            }
        }
        // Frozen paths keep their last z at the remaining checkpoints.
        for (k, s) in checkpoint_steps.iter().enumerate() {
            if step < *s && !matches!(stop, Stop::Killed) {
                checkpoints[k] = z;
            }
        }
        if record && rows.last().is_none_or(|r| r.t < step as f64 * dt) {
            rows.push(TrajectoryRow {
                path: index,
                t: step as f64 * dt,
                x: x.clone(),
                z,
                h,
            });
        }
        let (values, z_stop) = match stopped {
            Some((xs, zs)) => {
                let values = self
                    .functionals
                    .iter()
                    .enumerate()
                    .map(|(k, f)| match f {
                        Functional::Constant { value } => *value,
                        Functional::SupAbsCapped { cap } => sup_norm.min(*cap),
                        Functional::IndicatorAbove { level } => f64::from(u8::from(xs[0] > *level)),
                        Functional::ClippedTerminal { lo, hi } => xs[0].clamp(*lo, *hi),
                        Functional::OccupationBelow { .. } => occupation[k] / cfg.t_max,
                    })
                    .collect();
                (values, zs)
            }
            None => (vec![0.0; self.functionals.len()], 0.0),
        };
        PathOutcome {
            z,
            checkpoints,
            h,
            exploded: matches!(stop, Stop::Exploded),
            lower_exit: matches!(stop, Stop::LowerExit),
            killed: matches!(stop, Stop::Killed),
            overshoot: matches!(stop, Stop::Overshoot),
            flagged: matches!(stop, Stop::Flagged),
            levels,
            values,
            z_stop,
            min_z,
            h_truncation_ok,
            rows,
        }
    }
}

/// Sum in a fixed binary tree, independent of how the values were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 16 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean and its standard error from per-path values.
pub fn estimate(values: &[f64]) -> Estimate {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    let squares: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&squares) / (n - 1.0).max(1.0);
    Estimate {
        mean,
        se: (var / n).sqrt(),
    }
}

fn quantiles(mut values: Vec<f64>) -> Vec<Quantile> {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    [0.5, 0.9, 0.99, 0.999, 1.0]
        .into_iter()
        .map(|q| {
            let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
            Quantile { q, value: values[rank - 1] }
        })
        .collect()
}

/// Whether `drift` lets the half-line law reach the origin.
fn origin_accessible(field: &CoefficientField, qstar: bool, quad: &QuadConfig) -> Result<Tri, SimError> {
    let f = field.clone();
    let drift = real_fn(move |x| {
        let v = if qstar { f.dominated_drift1(x) } else { f.b1(x) };
        v.unwrap_or(f64::NAN)
    });
    let f = field.clone();
    let diffusion = real_fn(move |x| f.c1(x).unwrap_or(f64::NAN));
    let profile = build_scale(drift, diffusion, Domain::PositiveHalfLine, quad)?;
    Ok(feller_accessible(&profile, Boundary::Lower).accessible)
}

/// The origin policy for a half-line field under the given law.
pub fn lower_policy(field: &CoefficientField, measure: Measure, quad: &QuadConfig) -> Result<Option<LowerPolicy>, SimError> {
    if field.domain() != Domain::PositiveHalfLine {
        return Ok(None);
    }
    // Undecided or time-dependent cases are treated as accessible.
    let reach = |qstar: bool| -> Result<bool, SimError> {
        if field.is_time_dependent() {
            return Ok(true);
        }
        Ok(origin_accessible(field, qstar, quad)? != Tri::No)
    };
    let p_reach = reach(false)?;
    let q_reach = if field.beta_is_syntactically_zero() { p_reach } else { reach(true)? };
    Ok(Some(match measure {
        Measure::UnderQstar if q_reach => LowerPolicy::Exit,
        Measure::UnderQstar => LowerPolicy::Overshoot,
        Measure::UnderP if p_reach => LowerPolicy::Exit,
        Measure::UnderP if q_reach => LowerPolicy::WeightBySurvival,
        Measure::UnderP => LowerPolicy::Overshoot,
    }))
}

fn simulate_with(
    field: &CoefficientField,
    cfg: &SimConfig,
    functionals: &[Functional],
    stream_offset: u64,
) -> Result<SimReport, SimError> {
    cfg.validate()?;
    let lower = lower_policy(field, cfg.measure, &QuadConfig::default())?;
    let steps = cfg.steps();
    let plan = Plan {
        field,
        cfg,
        functionals,
        lower,
        stream_offset,
        steps,
        dt: cfg.t_max / steps as f64,
    };
    let outcomes: Vec<PathOutcome> = (0..cfg.n_paths).into_par_iter().map(|i| plan.run_path(i)).collect();
    let n = outcomes.len();
    let flagged = outcomes.iter().filter(|o| o.flagged).count();
    if flagged * 100 > n {
        return Err(SimError::TooManyFlags { flagged, n_paths: n });
    }
    let frequency = |pred: &dyn Fn(&PathOutcome) -> bool| outcomes.iter().filter(|o| pred(o)).count() as f64 / n as f64;
    let column = |get: &dyn Fn(&PathOutcome) -> f64| -> Vec<f64> { outcomes.iter().map(get).collect() };

    let mean_z = estimate(&column(&|o| o.z));
    let z_checkpoints = (0..4)
        .map(|k| {
            let e = estimate(&column(&|o| o.checkpoints[k]));
            Checkpoint {
                t: plan.dt * ((k + 1) * steps).div_ceil(4) as f64,
                mean_z: e.mean,
                se: e.se,
            }
        })
        .collect();
    let weighted = cfg.measure == Measure::UnderP;
    let functionals = functionals
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let e = estimate(&column(&|o| if weighted { o.values[k] * o.z_stop } else { o.values[k] }));
            FunctionalEstimate {
                functional: f.clone(),
                estimate: e.mean,
                se: e.se,
            }
        })
        .collect();
    let crossings = cfg
        .r_levels
        .iter()
        .enumerate()
        .map(|(k, level)| {
            let count = outcomes.iter().filter(|o| o.levels & (1 << k) != 0).count();
            LevelCrossing {
                level: *level,
                count,
                frequency: count as f64 / n as f64,
            }
        })
        .collect();
    let h_values = column(&|o| o.h);
    let h_above_threshold = frequency(&|o| o.h >= cfg.h_blowup_threshold);
    let min_z = outcomes.iter().filter(|o| !o.killed).map(|o| o.min_z).fold(1.0, f64::min);
    let mut notes = vec![FREEZING_NOTE.to_string()];
    if let Some(policy) = lower {
        notes.push(format!("origin policy: {policy:?}"));
    }
    if flagged > 0 {
        notes.push(format!("{flagged} paths stopped at a point where c is not positive definite or not evaluable"));
    }
    let trajectories = outcomes.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    Ok(SimReport {
        measure: cfg.measure,
        seed: cfg.seed,
        n_paths: n,
        dt: plan.dt,
        t_max: cfg.t_max,
        steps,
        mean_z,
        z_checkpoints,
        functionals,
        explosion_frequency: frequency(&|o| o.exploded),
        lower_exit_frequency: frequency(&|o| o.lower_exit),
        killed_frequency: frequency(&|o| o.killed),
        overshoots: outcomes.iter().filter(|o| o.overshoot).count(),
        flagged,
        crossings,
        h_quantiles: quantiles(h_values),
        h_blowup_threshold: cfg.h_blowup_threshold,
        h_above_threshold,
        min_z,
        h_truncation_ok: outcomes.iter().all(|o| o.h_truncation_ok),
        lower_policy: lower,
        notes,
        trajectories,
    })
}

/// Simulate `cfg.n_paths` paths under `cfg.measure`.
pub fn simulate(field: &CoefficientField, cfg: &SimConfig) -> Result<SimReport, SimError> {
    simulate_with(field, cfg, &[], 0)
}

/// Simulation that also evaluates path functionals at the stopping time.
pub fn simulate_functionals(field: &CoefficientField, functionals: &[Functional], cfg: &SimConfig) -> Result<SimReport, SimError> {
    simulate_with(field, cfg, functionals, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferDefect {
    pub functional: Functional,
    #[serde(with = "crate::extended_float")]
    pub weighted_p: f64,
    #[serde(with = "crate::extended_float")]
    pub se_p: f64,
    #[serde(with = "crate::extended_float")]
    pub qstar: f64,
    #[serde(with = "crate::extended_float")]
    pub se_qstar: f64,
    #[serde(with = "crate::extended_float")]
    pub defect: f64,
    #[serde(with = "crate::extended_float")]
    pub pooled_se: f64,
    pub within_3se: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub defects: Vec<TransferDefect>,
    pub under_p: SimReport,
    pub under_qstar: SimReport,
}

/// Compare `E^P[f Z_stop]` with `E^{Q*}[f; not exited by the stop]` on
/// independent substreams.
pub fn girsanov_transfer_check(
    field: &CoefficientField,
    functionals: &[Functional],
    cfg: &SimConfig,
) -> Result<TransferReport, SimError> {
    let p_cfg = SimConfig {
        measure: Measure::UnderP,
        ..cfg.clone()
    };
    let q_cfg = SimConfig {
        measure: Measure::UnderQstar,
        ..cfg.clone()
    };
    let under_p = simulate_with(field, &p_cfg, functionals, 0)?;
    let under_qstar = simulate_with(field, &q_cfg, functionals, QSTAR_STREAM_OFFSET)?;
    let defects = under_p
        .functionals
        .iter()
        .zip(&under_qstar.functionals)
        .map(|(p, q)| {
            let pooled_se = p.se.hypot(q.se);
            let defect = p.estimate - q.estimate;
            TransferDefect {
                functional: p.functional.clone(),
                weighted_p: p.estimate,
                se_p: p.se,
                qstar: q.estimate,
                se_qstar: q.se,
                defect,
                pooled_se,
                within_3se: defect.abs() <= 3.0 * pooled_se,
            }
        })
        .collect();
    Ok(TransferReport {
        defects,
        under_p,
        under_qstar,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplosionStats {
    pub measure: Measure,
    pub explosion_frequency: f64,
    pub lower_exit_frequency: f64,
    pub crossings: Vec<LevelCrossing>,
    pub overshoots: usize,
}

/// Level-crossing and explosion frequencies before `t_max`.
pub fn explosion_stats(field: &CoefficientField, cfg: &SimConfig) -> Result<ExplosionStats, SimError> {
    let r = simulate(field, cfg)?;
    Ok(ExplosionStats {
        measure: r.measure,
        explosion_frequency: r.explosion_frequency,
        lower_exit_frequency: r.lower_exit_frequency,
        crossings: r.crossings,
        overshoots: r.overshoots,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub local_verdict: Tri,
    pub passed: bool,
    pub narrative: Vec<String>,
    pub transfer: TransferReport,
}

/// Check a decisive local verdict against simulation. `Yes` needs
/// `E^P[Z] = 1` and the transfer identity within 3 standard errors; `No`
/// needs a deficit of `E^P[Z]` beyond 5 standard errors at some checkpoint,
/// or at least the `Q*` explosion frequency of `Q*` paths with `H` past the
/// blow-up threshold.
pub fn cross_validate(field: &CoefficientField, local: Tri, cfg: &SimConfig) -> Result<CrossValidation, SimError> {
    if local == Tri::Inconclusive {
        return Err(SimError::Undecided);
    }
    let transfer = girsanov_transfer_check(field, &default_functionals(field), cfg)?;
    let p = &transfer.under_p;
    let q = &transfer.under_qstar;
    let mut narrative = Vec::new();
    let passed = if local == Tri::Yes {
        let gap = (p.mean_z.mean - 1.0).abs();
        let z_ok = gap <= 3.0 * p.mean_z.se;
        narrative.push(format!(
            "mean_z = {} with standard error {}: |mean_z - 1| {} 3 SE",
            p.mean_z.mean,
            p.mean_z.se,
            if z_ok { "<=" } else { ">" }
        ));
        let bad: Vec<&TransferDefect> = transfer.defects.iter().filter(|d| !d.within_3se).collect();
        for d in &bad {
            narrative.push(format!("transfer defect {} exceeds 3 pooled SE {} for {:?}", d.defect, d.pooled_se, d.functional));
        }
        if bad.is_empty() {
            narrative.push(format!("all {} transfer defects lie within 3 pooled SE", transfer.defects.len()));
        }
        z_ok && bad.is_empty()
    } else {
        let deficit = p.z_checkpoints.iter().find(|c| 1.0 - c.mean_z > 5.0 * c.se);
        let blowup = q.explosion_frequency > 0.0 && q.h_above_threshold >= q.explosion_frequency;
        match deficit {
            Some(c) => narrative.push(format!(
                "mean_z at t = {} is {} with SE {}: deficit beyond 5 SE",
                c.t, c.mean_z, c.se
            )),
            None => narrative.push("no checkpoint shows a deficit beyond 5 SE".into()),
        }
        narrative.push(format!(
            "under Q*: explosion frequency {}, fraction with H >= {} is {}{}",
            q.explosion_frequency,
            q.h_blowup_threshold,
            q.h_above_threshold,
            if blowup { " (blow-up criterion met)" } else { "" }
        ));
        deficit.is_some() || blowup
    };
    narrative.push(if passed {
        "simulation agrees with the deterministic verdict".into()
    } else {
        "simulation contradicts the deterministic verdict".into()
    });
    Ok(CrossValidation {
        local_verdict: local,
        passed,
        narrative,
        transfer,
    })
}

/// Write recorded trajectories as CSV with columns `path,t,x1..xd,z,h`.
pub fn write_trajectories_csv<W: std::io::Write>(rows: &[TrajectoryRow], dimension: usize, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["path".to_string(), "t".to_string()];
    header.extend((1..=dimension).map(|i| if dimension == 1 { "x".to_string() } else { format!("x{i}") }));
    header.extend(["z".to_string(), "h".to_string()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.path.to_string(), format!("{:e}", r.t)];
        rec.extend(r.x.iter().map(|v| format!("{v:e}")));
        rec.extend([format!("{:e}", r.z), format!("{:e}", r.h)]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(b: &str, beta: &str, x0: f64) -> CoefficientField {
        CoefficientField::one_dimensional(Domain::RealLine, b, "1", beta, x0).unwrap()
    }

    #[test]
    fn non_finite_estimates_round_trip() {
        for mean in [f64::INFINITY, f64::NEG_INFINITY, 0.25] {
            let e = Estimate { mean, se: f64::NAN };
            let text = serde_json::to_string(&e).unwrap();
            let back: Estimate = serde_json::from_str(&text).unwrap();
            assert_eq!(back.mean, mean, "{text}");
            assert!(back.se.is_nan());
        }
        assert!(serde_json::from_str::<Estimate>(r#"{"mean": "huge", "se": 0}"#).is_err());
    }

    fn small(n: usize) -> SimConfig {
        SimConfig {
            n_paths: n,
            seed: 7,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_beta_keeps_z_exactly_one() {
        let r = simulate(&line("0", "0", 0.0), &small(2000)).unwrap();
        assert_eq!(r.mean_z, Estimate { mean: 1.0, se: 0.0 });
        assert!(r.z_checkpoints.iter().all(|c| c.mean_z == 1.0));
        assert_eq!(r.explosion_frequency, 0.0);
        assert_eq!(r.min_z, 1.0);
    }

    #[test]
    fn drifted_brownian_density_is_a_martingale() {
        let r = simulate(&line("0", "1", 0.0), &small(20_000)).unwrap();
        assert!((r.mean_z.mean - 1.0).abs() <= 3.0 * r.mean_z.se, "{:?}", r.mean_z);
        assert!(r.min_z > 0.0 && r.h_truncation_ok);
        assert!(r.h_quantiles.iter().all(|q| (q.value - 1.0).abs() < 1e-9));
    }

    #[test]
    fn seeds_determine_reports() {
        let f = line("0", "x", 0.5);
        let a = simulate(&f, &small(500)).unwrap();
        let b = simulate(&f, &small(500)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&f, &SimConfig { seed: 8, ..small(500) }).unwrap();
        assert_ne!(a.mean_z, c.mean_z);
    }

    #[test]
    fn cubic_drift_explodes_under_qstar() {
        let cfg = SimConfig {
            measure: Measure::UnderQstar,
            ..small(2000)
        };
        let s = explosion_stats(&line("0", "x^3", 1.0), &cfg).unwrap();
        assert!(s.explosion_frequency > 0.5, "{s:?}");
        assert!(s.crossings.windows(2).all(|w| w[0].count >= w[1].count));
    }

    #[test]
    fn transfer_identity_for_drifted_brownian_motion() {
        let f = line("0", "1", 0.0);
        let t = girsanov_transfer_check(&f, &default_functionals(&f), &small(20_000)).unwrap();
        for d in &t.defects {
            assert!(d.within_3se, "{d:?}");
        }
        let ind = &t.under_qstar.functionals[2];
        assert!((ind.estimate - 0.841_344_746).abs() < 4.0 * ind.se, "{ind:?}");
    }

    #[test]
    fn inverse_bessel_density_loses_mass() {
        let f = CoefficientField::one_dimensional(Domain::PositiveHalfLine, "1/x", "1", "-1/x", 1.0).unwrap();
        let r = simulate(&f, &small(20_000)).unwrap();
        assert_eq!(r.lower_policy, Some(LowerPolicy::WeightBySurvival));
        let target = 0.682_689_492_137_085_9;
        assert!((r.mean_z.mean - target).abs() <= 3.0 * r.mean_z.se, "{:?}", r.mean_z);
    }

    #[test]
    fn cross_validation_outcomes() {
        let f = line("0", "1", 0.0);
        assert!(cross_validate(&f, Tri::Yes, &small(5000)).unwrap().passed);
        assert!(!cross_validate(&f, Tri::No, &small(5000)).unwrap().passed);
        let cubic = line("0", "x^3", 1.0);
        let cv = cross_validate(&cubic, Tri::No, &small(5000)).unwrap();
        assert!(cv.passed, "{:?}", cv.narrative);
        assert!(matches!(cross_validate(&f, Tri::Inconclusive, &small(10)), Err(SimError::Undecided)));
    }

    #[test]
    fn config_validation_and_recording() {
        assert!(SimConfig { dt: 0.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { r_levels: vec![4.0, 2.0], ..SimConfig::default() }.validate().is_err());
        let cfg = SimConfig {
            record_paths: 2,
            record_stride: 100,
            ..small(10)
        };
        let r = simulate(&line("0", "1", 0.0), &cfg).unwrap();
        assert_eq!(r.trajectories.len(), 2 * 11);
        let mut buf = Vec::new();
        write_trajectories_csv(&r.trajectories, 1, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path,t,x,z,h\n"));
        assert_eq!(text.lines().count(), 23);
    }

    #[test]
    fn pairwise_sum_matches_exact_sums() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        let e = estimate(&[1.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.se - 1.0).abs() < 1e-15);
    }
}
