//! Run configuration, task dispatch and report emission.
//!
//! A run reads one JSON configuration, dispatches to the named task and
//! returns a self-contained report: the resolved configuration is echoed so
//! the report can be re-run. Reports serialise canonically (sorted keys,
//! floats with 17 significant digits) so equal runs give equal bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::classify1d::{classify, classify_reverse, ACVerdict, ClassifyConfig, BATTERY_LABELS, BOUNDARY_READING_NOTE};
use crate::expr::{CoefficientField, Domain, Expression, FieldSpec};
use crate::mc::{cross_validate, default_functionals, simulate_functionals, write_trajectories_csv, CrossValidation, SimConfig, SimReport};
use crate::quad::QuadConfig;
use crate::radial::{classify_radial, khasminskii_test, EnvelopeDirection, EnvelopePair, KhasminskiiKind, KhasminskiiVerdict, RadialConfig, RadialVerdict};
use crate::scale::{build_scale, feller_accessible, is_recurrent, real_fn, Boundary, BoundaryVerdict};
use crate::sufficiency::{
    benes_check, default_inequality_grid, elementary_inequality_check, local_novikov_check, GrowthConfig, GrowthReport, GrowthVerdict,
    NovikovReport,
};
use crate::Tri;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    #[serde(alias = "Classify1D", alias = "classify-1d")]
    Classify1d,
    #[serde(alias = "ClassifyRadial")]
    ClassifyRadial,
    #[serde(alias = "Khasminskii")]
    Khasminskii,
    #[serde(alias = "GrowthCheck")]
    GrowthCheck,
    #[serde(alias = "Boundary")]
    Boundary,
    #[serde(alias = "Simulate")]
    Simulate,
    #[serde(alias = "CrossValidate")]
    CrossValidate,
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Task, String> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| {
            format!("unknown task {s:?}; expected one of classify1d, classify-radial, khasminskii, growth-check, boundary, simulate, cross-validate")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub v: String,
    pub w: String,
    pub direction: EnvelopeDirection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NovikovSpec {
    /// Ball index.
    pub n: usize,
    #[serde(default = "default_novikov_directions")]
    pub directions: usize,
}

fn default_novikov_directions() -> usize {
    64
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub csv_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelopes: Option<EnvelopeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<String>,
    /// Replaces the quadrature settings of every module when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadConfig>,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub radial: RadialConfig,
    #[serde(default)]
    pub growth: GrowthConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub novikov: Option<NovikovSpec>,
    #[serde(default)]
    pub mc: SimConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("{context}: {message}")]
    Module { context: &'static str, message: String },
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn schema(pointer: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Schema {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

fn module(context: &'static str) -> impl FnOnce(&dyn std::fmt::Display) -> HarnessError {
    move |e| HarnessError::Module {
        context,
        message: e.to_string(),
    }
}

/// JSON pointer for a serde path such as `mc.r_levels[2]`.
fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => write!(out, "/{index}").unwrap(),
            Segment::Map { key } => write!(out, "/{}", key.replace('~', "~0").replace('/', "~1")).unwrap(),
            Segment::Enum { variant } => write!(out, "/{variant}").unwrap(),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parse a configuration, reporting schema violations by JSON pointer.
pub fn load_config(text: &str) -> Result<RunConfig, HarnessError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let cfg: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let pointer = pointer_of(e.path());
        schema(&pointer, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| schema("/", e.to_string()))?;
    Ok(cfg)
}

impl RunConfig {
    fn with_quad(&self) -> RunConfig {
        let mut cfg = self.clone();
        if let Some(q) = &self.quad {
            cfg.classify.quad = q.clone();
            cfg.radial.classify.quad = q.clone();
            cfg.growth.quad = q.clone();
        }
        cfg
    }

    fn build_field(&self) -> Result<CoefficientField, HarnessError> {
        let spec = self.field.as_ref().ok_or_else(|| schema("/field", "every task needs a field"))?;
        CoefficientField::from_spec(spec).map_err(|e| schema("/field", e.to_string()))
    }

    fn envelope_pair(&self) -> Result<EnvelopePair, HarnessError> {
        let spec = self
            .envelopes
            .as_ref()
            .ok_or_else(|| schema("/envelopes", "the khasminskii task needs envelopes"))?;
        let parse = |text: &str, pointer: &str| Expression::parse(text).map_err(|e| schema(pointer, e.to_string()));
        Ok(EnvelopePair {
            v: parse(&spec.v, "/envelopes/v")?,
            w: parse(&spec.w, "/envelopes/w")?,
            direction: spec.direction,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Inconclusive => 2,
            Status::Fail => 1,
        }
    }

    fn of(t: Tri) -> Status {
        if t.is_decisive() {
            Status::Pass
        } else {
            Status::Inconclusive
        }
    }

    fn worst(self, other: Status) -> Status {
        match (self, other) {
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            (Status::Inconclusive, _) | (_, Status::Inconclusive) => Status::Inconclusive,
            _ => Status::Pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionLabel {
    pub key: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classify1dResult {
    pub verdict: ACVerdict,
    /// Local verdict with the roles of the two laws exchanged, or the reason
    /// it could not be computed.
    pub reverse_local: Option<Tri>,
    pub reverse_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawBoundaries {
    /// `dominating` uses drift `b`, `dominated` uses `b + c beta`.
    pub law: String,
    pub upper: BoundaryVerdict,
    pub lower: BoundaryVerdict,
    pub recurrent: Option<Tri>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthResult {
    pub growth: GrowthReport,
    pub novikov: Option<NovikovReport>,
    pub elementary_inequality_max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossValidateResult {
    pub classification: ACVerdict,
    pub cross_validation: Option<CrossValidation>,
}

// Built once per run, so the size spread between variants does not matter.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskResult {
    Classify1d(Classify1dResult),
    ClassifyRadial(RadialVerdict),
    Khasminskii(KhasminskiiVerdict),
    GrowthCheck(GrowthResult),
    Boundary(Vec<LawBoundaries>),
    Simulate(SimReport),
    CrossValidate(CrossValidateResult),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub task: Task,
    pub status: Status,
    pub exit_code: i32,
    pub artifact_version: String,
    pub seed: u64,
    pub config: RunConfig,
    pub condition_labels: Vec<ConditionLabel>,
    pub boundary_reading_note: String,
    pub result: TaskResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

fn battery_labels() -> Vec<ConditionLabel> {
    BATTERY_LABELS
        .iter()
        .map(|(key, role)| ConditionLabel {
            key: key.to_string(),
            role: role.to_string(),
        })
        .collect()
}

fn comparison_labels() -> Vec<ConditionLabel> {
    let roles = [
        ("plus1", "upper: envelope scale diverges"),
        ("plus2", "upper: tail/c not integrable"),
        ("plus3", "upper: tail*w/c not integrable"),
        ("plus4", "upper: tail*w/c integrable"),
        ("minus1", "lower: envelope scale diverges"),
        ("minus2", "lower: tail/c not integrable"),
        ("minus3", "lower: tail*w/c not integrable"),
        ("minus4", "lower: tail*w/c integrable"),
    ];
    roles
        .iter()
        .map(|(k, r)| ConditionLabel {
            key: k.to_string(),
            role: r.to_string(),
        })
        .collect()
}

fn boundaries(field: &CoefficientField, cfg: &ClassifyConfig) -> Result<Vec<LawBoundaries>, HarnessError> {
    if field.dimension() != 1 {
        return Err(schema("/field", "the boundary task needs a one-dimensional field"));
    }
    if field.is_time_dependent() {
        return Err(schema("/field", "the boundary task needs time-independent coefficients"));
    }
    let mut out = Vec::new();
    for (law, dominated) in [("dominating", false), ("dominated", true)] {
        let f = field.clone();
        let v = real_fn(move |x| if dominated { f.dominated_drift1(x) } else { f.b1(x) }.unwrap_or(f64::NAN));
        let f = field.clone();
        let c = real_fn(move |x| f.c1(x).unwrap_or(f64::NAN));
        let profile = build_scale(v, c, field.domain(), &cfg.quad).map_err(|e| module("scale")(&e))?;
        let recurrent = if field.domain() == Domain::RealLine {
            Some(is_recurrent(&profile).map_err(|e| module("scale")(&e))?)
        } else {
            None
        };
        out.push(LawBoundaries {
            law: law.to_string(),
            upper: feller_accessible(&profile, Boundary::Upper),
            lower: feller_accessible(&profile, Boundary::Lower),
            recurrent,
        });
    }
    Ok(out)
}

fn classify_any(field: &CoefficientField, cfg: &RunConfig) -> Result<ACVerdict, HarnessError> {
    if field.dimension() == 1 {
        classify(field, &cfg.classify).map_err(|e| module("classification")(&e))
    } else {
        Ok(classify_radial(field, &cfg.radial).map_err(|e| module("radial classification")(&e))?.verdict)
    }
}

/// Run one task. `task` overrides the task named in the configuration.
pub fn run(config: &RunConfig, task: Option<Task>) -> Result<Report, HarnessError> {
    let task = task
        .or(config.task)
        .ok_or_else(|| schema("/task", "no task given on the command line or in the configuration"))?;
    let mut echo = config.clone();
    echo.task = Some(task);
    let cfg = echo.with_quad();
    let field = cfg.build_field()?;
    let mut labels = battery_labels();
    let (result, status) = match task {
        Task::Classify1d => {
            let verdict = classify(&field, &cfg.classify).map_err(|e| module("classification")(&e))?;
            let (reverse_local, reverse_error) = match classify_reverse(&field, &cfg.classify) {
                Ok(v) => (Some(v.verdict), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let status = Status::of(verdict.local_ac).worst(Status::of(verdict.global_ac));
            (
                TaskResult::Classify1d(Classify1dResult {
                    verdict,
                    reverse_local,
                    reverse_error,
                }),
                status,
            )
        }
        Task::ClassifyRadial => {
            let v = classify_radial(&field, &cfg.radial).map_err(|e| module("radial classification")(&e))?;
            let status = Status::of(v.verdict.local_ac).worst(Status::of(v.verdict.global_ac));
            (TaskResult::ClassifyRadial(v), status)
        }
        Task::Khasminskii => {
            let env = cfg.envelope_pair()?;
            labels = comparison_labels();
            let k = khasminskii_test(&field, &env, &cfg.radial).map_err(|e| module("comparison test")(&e))?;
            let status = if k.kind == KhasminskiiKind::Inconclusive {
                Status::Inconclusive
            } else {
                Status::Pass
            };
            (TaskResult::Khasminskii(k), status)
        }
        Task::GrowthCheck => {
            let gamma_text = cfg.gamma.clone().unwrap_or_else(|| "1".to_string());
            let gamma = Expression::parse(&gamma_text).map_err(|e| schema("/gamma", e.to_string()))?;
            let growth = benes_check(&field, &gamma, &cfg.growth).map_err(|e| module("growth test")(&e))?;
            let novikov = match &cfg.novikov {
                Some(n) => Some(
                    local_novikov_check(&field, n.n, n.directions, cfg.growth.direction_seed).map_err(|e| module("bounded energy test")(&e))?,
                ),
                None => None,
            };
            let mut status = match growth.verdict {
                GrowthVerdict::SatisfiedOnRange { .. } => Status::Pass,
                _ => Status::Inconclusive,
            };
            if let Some(n) = &novikov {
                status = status.worst(Status::of(n.holds));
            }
            let violation = elementary_inequality_check(&default_inequality_grid());
            (
                TaskResult::GrowthCheck(GrowthResult {
                    growth,
                    novikov,
                    elementary_inequality_max_violation: violation,
                }),
                status,
            )
        }
        Task::Boundary => {
            let b = boundaries(&field, &cfg.classify)?;
            let status = b.iter().fold(Status::Pass, |s, l| {
                s.worst(Status::of(l.upper.accessible)).worst(Status::of(l.lower.accessible))
            });
            (TaskResult::Boundary(b), status)
        }
        Task::Simulate => {
            let r = simulate_functionals(&field, &default_functionals(&field), &cfg.mc).map_err(|e| module("simulation")(&e))?;
            (TaskResult::Simulate(r), Status::Pass)
        }
        Task::CrossValidate => {
            let classification = classify_any(&field, &cfg)?;
            if classification.local_ac == Tri::Inconclusive {
                (
                    TaskResult::CrossValidate(CrossValidateResult {
                        classification,
                        cross_validation: None,
                    }),
                    Status::Inconclusive,
                )
            } else {
                let cv = cross_validate(&field, classification.local_ac, &cfg.mc).map_err(|e| module("cross-validation")(&e))?;
                let status = if cv.passed { Status::Pass } else { Status::Fail };
                (
                    TaskResult::CrossValidate(CrossValidateResult {
                        classification,
                        cross_validation: Some(cv),
                    }),
                    status,
                )
            }
        }
    };
    Ok(Report {
        task,
        status,
        exit_code: status.exit_code(),
        artifact_version: ARTIFACT_VERSION.to_string(),
        seed: echo.mc.seed,
        config: echo,
        condition_labels: labels,
        boundary_reading_note: BOUNDARY_READING_NOTE.to_string(),
        result,
        timing_ms: None,
    })
}

fn write_canonical(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null | Value::Bool(_) | Value::String(_) => out.push_str(&v.to_string()),
        Value::Number(n) => {
            if n.is_f64() {
                let f = n.as_f64().unwrap_or(f64::NAN);
                write!(out, "{f:.16e}").unwrap();
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_canonical(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_canonical(&map[*k], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Canonical JSON: sorted keys, two-space indentation, floats in `{:.16e}`.
/// Report types write non-finite floats as strings; any that reach this
/// writer as bare floats become `null`.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report types serialise to JSON");
    let mut out = String::new();
    write_canonical(&v, 0, &mut out);
    out.push('\n');
    out
}

fn io_err(path: &Path) -> impl FnOnce(&dyn std::fmt::Display) -> HarnessError + '_ {
    move |e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn tri_str(t: Tri) -> String {
    serde_json::to_value(t).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn write_battery(verdict: &ACVerdict, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path)(&e))?;
    let rows = verdict.battery.rows();
    let mut write = |rec: &[String]| w.write_record(rec).map_err(|e| io_err(path)(&e));
    write(&["condition", "role", "holds", "evidence", "value"].map(String::from))?;
    for (key, role, cond) in rows {
        let (kind, value) = match &cond.evidence {
            Some(e) => {
                let v = serde_json::to_value(e).unwrap_or(Value::Null);
                let kind = v.get("kind").and_then(Value::as_str).unwrap_or("").to_string();
                (kind, e.value().map(|x| format!("{x:.16e}")).unwrap_or_default())
            }
            None => ("implied".to_string(), String::new()),
        };
        write(&[key.to_string(), role.to_string(), tri_str(cond.holds), kind, value])?;
    }
    w.flush().map_err(|e| io_err(path)(&e))
}

fn write_sim_tables(reports: &[&SimReport], dir: &Path, written: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let path = dir.join("crossings.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path)(&e))?;
    w.write_record(["measure", "level", "count", "frequency"]).map_err(|e| io_err(&path)(&e))?;
    for r in reports {
        let measure = serde_json::to_value(r.measure).unwrap_or(Value::Null);
        for c in &r.crossings {
            w.write_record([
                measure.as_str().unwrap_or("").to_string(),
                format!("{:.16e}", c.level),
                c.count.to_string(),
                format!("{:.16e}", c.frequency),
            ])
            .map_err(|e| io_err(&path)(&e))?;
        }
    }
    w.flush().map_err(|e| io_err(&path)(&e))?;
    written.push(path);

    let path = dir.join("h_quantiles.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path)(&e))?;
    w.write_record(["measure", "q", "h"]).map_err(|e| io_err(&path)(&e))?;
    for r in reports {
        let measure = serde_json::to_value(r.measure).unwrap_or(Value::Null);
        for q in &r.h_quantiles {
            w.write_record([
                measure.as_str().unwrap_or("").to_string(),
                format!("{:.16e}", q.q),
                format!("{:.16e}", q.value),
            ])
            .map_err(|e| io_err(&path)(&e))?;
        }
    }
    w.flush().map_err(|e| io_err(&path)(&e))?;
    written.push(path);

    for r in reports {
        if r.trajectories.is_empty() {
            continue;
        }
        let d = r.trajectories[0].x.len();
        let name = match r.measure {
            crate::mc::Measure::UnderP => "paths_under_p.csv",
            crate::mc::Measure::UnderQstar => "paths_under_qstar.csv",
        };
        let path = dir.join(name);
        let file = std::fs::File::create(&path).map_err(|e| io_err(&path)(&e))?;
        write_trajectories_csv(&r.trajectories, d, file).map_err(|e| io_err(&path)(&e))?;
        written.push(path);
    }
    Ok(())
}

/// Write the tabular sections of a report as CSV files; returns their paths.
pub fn write_csv(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir)(&e))?;
    let mut written = Vec::new();
    let verdict = match &report.result {
        TaskResult::Classify1d(r) => Some(&r.verdict),
        TaskResult::ClassifyRadial(r) => Some(&r.verdict),
        TaskResult::CrossValidate(r) => Some(&r.classification),
        _ => None,
    };
    if let Some(v) = verdict {
        let path = dir.join("battery.csv");
        write_battery(v, &path)?;
        written.push(path);
    }
    match &report.result {
        TaskResult::Simulate(r) => write_sim_tables(&[r], dir, &mut written)?,
        TaskResult::CrossValidate(CrossValidateResult {
            cross_validation: Some(cv),
            ..
        }) => write_sim_tables(&[&cv.transfer.under_p, &cv.transfer.under_qstar], dir, &mut written)?,
        _ => {}
    }
    Ok(written)
}

/// Write the canonical JSON report.
pub fn write_json(report: &Report, path: &Path) -> Result<(), HarnessError> {
    std::fs::write(path, canonical_json(report)).map_err(|e| io_err(path)(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(task: &str, beta: &str) -> RunConfig {
        load_config(&format!(
            r#"{{"task": "{task}", "field": {{"b": "0", "c": "1", "beta": "{beta}", "x0": 0.0}}, "mc": {{"n_paths": 200, "seed": 3}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn drifted_brownian_classification_report() {
        let r = run(&config("Classify1D", "1"), None).unwrap();
        let TaskResult::Classify1d(c) = &r.result else { panic!() };
        assert_eq!((c.verdict.local_ac, c.verdict.global_ac), (Tri::Yes, Tri::No));
        assert_eq!((r.status, r.exit_code), (Status::Pass, 0));
        assert_eq!(r.condition_labels.len(), 6);
    }

    #[test]
    fn zero_beta_simulation_report() {
        let r = run(&config("simulate", "0"), None).unwrap();
        let TaskResult::Simulate(s) = &r.result else { panic!() };
        assert_eq!(s.mean_z.mean, 1.0);
    }

    #[test]
    fn missing_envelopes_point_at_envelopes() {
        let err = run(&config("khasminskii", "0"), None).unwrap_err();
        assert!(matches!(&err, HarnessError::Schema { pointer, .. } if pointer == "/envelopes"), "{err}");
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let err = load_config(r#"{"mc": {"n_paths": "many"}}"#).unwrap_err();
        assert!(matches!(&err, HarnessError::Schema { pointer, .. } if pointer == "/mc/n_paths"), "{err}");
        let err = load_config(r#"{"task": "classify1d", "bogus": 1}"#).unwrap_err();
        assert!(matches!(&err, HarnessError::Schema { .. }), "{err}");
        assert!("CrossValidate".parse::<Task>().is_ok());
        assert!("cross-validate".parse::<Task>().is_ok());
        assert!("nope".parse::<Task>().is_err());
    }

    #[test]
    fn canonical_json_round_trips_and_is_stable() {
        let r = run(&config("simulate", "1"), None).unwrap();
        let a = canonical_json(&r);
        let b = canonical_json(&run(&config("simulate", "1"), None).unwrap());
        assert_eq!(a, b);
        let parsed: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed, serde_json::to_value(&r).unwrap());
        assert!(a.contains("\"exit_code\": 0"));
    }

    #[test]
    fn csv_battery_has_six_rows() {
        let r = run(&config("classify1d", "1"), None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_csv(&r, dir.path()).unwrap();
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().count(), 7);
    }
}
