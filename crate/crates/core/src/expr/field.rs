//! Coefficient fields: drift `b`, diffusion `c` and perturbation `beta`
//! together with the state space and the starting point.
//!
//! For `d > 1` the diffusion matrix is given by its upper triangle (or a
//! single scalar expression meaning `scalar * I`); the lower triangle is the
//! mirror image, so `c` is symmetric by construction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EvalError, Expression, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    #[serde(alias = "RealLine")]
    RealLine,
    #[serde(alias = "PositiveHalfLine")]
    PositiveHalfLine,
    #[serde(alias = "EuclideanD", alias = "Euclidean")]
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Scalar(String),
    Components(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    /// One expression: the scalar for `d = 1`, a multiple of the identity otherwise.
    Scalar(String),
    /// Row `i` lists entries `(i, i..d)`; full rows are accepted when the
    /// lower part mirrors the upper part.
    Rows(Vec<Vec<String>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointSpec {
    Scalar(f64),
    Components(Vec<f64>),
}

/// The textual form of a field as it appears in a run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    pub b: VectorSpec,
    pub c: MatrixSpec,
    pub beta: VectorSpec,
    pub x0: PointSpec,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("cannot parse {component}: {source}")]
    Parse {
        component: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid field: {0}")]
    Invalid(String),
    #[error("diffusion coefficient is not positive at {point:?}: {detail}")]
    NotPositive { point: Vec<f64>, detail: String },
    #[error("evaluation failed at {point:?}: {source}")]
    Eval {
        point: Vec<f64>,
        #[source]
        source: EvalError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    dimension: usize,
    domain: Domain,
    b: Vec<Expression>,
    /// Upper triangle, row-major: `(0,0), (0,1), .., (0,d-1), (1,1), ..`.
    c: Vec<Expression>,
    beta: Vec<Expression>,
    x0: Vec<f64>,
}

fn parse_component(component: String, text: &str) -> Result<Expression, FieldError> {
    Expression::parse(text).map_err(|source| FieldError::Parse { component, source })
}

fn upper_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * d - i * (i + 1) / 2 + j
}

impl CoefficientField {
    /// A one-dimensional field from expression texts.
    pub fn one_dimensional(
        domain: Domain,
        b: &str,
        c: &str,
        beta: &str,
        x0: f64,
    ) -> Result<CoefficientField, FieldError> {
        CoefficientField::from_spec(&FieldSpec {
            dimension: Some(1),
            domain: Some(domain),
            b: VectorSpec::Scalar(b.into()),
            c: MatrixSpec::Scalar(c.into()),
            beta: VectorSpec::Scalar(beta.into()),
            x0: PointSpec::Scalar(x0),
        })
    }

    /// A field on `R^d` with `c` given as its upper-triangle rows.
    pub fn euclidean(
        b: &[&str],
        c_rows: &[&[&str]],
        beta: &[&str],
        x0: &[f64],
    ) -> Result<CoefficientField, FieldError> {
        CoefficientField::from_spec(&FieldSpec {
            dimension: Some(b.len()),
            domain: Some(Domain::Euclidean),
            b: VectorSpec::Components(b.iter().map(|s| s.to_string()).collect()),
            c: MatrixSpec::Rows(
                c_rows
                    .iter()
                    .map(|r| r.iter().map(|s| s.to_string()).collect())
                    .collect(),
            ),
            beta: VectorSpec::Components(beta.iter().map(|s| s.to_string()).collect()),
            x0: PointSpec::Components(x0.to_vec()),
        })
    }

    /// A field on `R^d` with `c = scalar * I`.
    pub fn euclidean_isotropic(
        b: &[&str],
        c: &str,
        beta: &[&str],
        x0: &[f64],
    ) -> Result<CoefficientField, FieldError> {
        CoefficientField::from_spec(&FieldSpec {
            dimension: Some(b.len()),
            domain: Some(Domain::Euclidean),
            b: VectorSpec::Components(b.iter().map(|s| s.to_string()).collect()),
            c: MatrixSpec::Scalar(c.into()),
            beta: VectorSpec::Components(beta.iter().map(|s| s.to_string()).collect()),
            x0: PointSpec::Components(x0.to_vec()),
        })
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<CoefficientField, FieldError> {
        let inferred = match (&spec.b, &spec.x0) {
            (VectorSpec::Components(v), _) => v.len(),
            (_, PointSpec::Components(v)) => v.len(),
            _ => 1,
        };
        let d = spec.dimension.unwrap_or(inferred);
        if d == 0 {
            return Err(FieldError::Invalid("dimension must be positive".into()));
        }
        let domain = spec.domain.unwrap_or(if d == 1 {
            Domain::RealLine
        } else {
            Domain::Euclidean
        });
        match (d, domain) {
            (1, Domain::Euclidean) => {
                return Err(FieldError::Invalid(
                    "a one-dimensional field lives on the real line or the positive half-line".into(),
                ))
            }
            (d, Domain::RealLine | Domain::PositiveHalfLine) if d > 1 => {
                return Err(FieldError::Invalid(format!(
                    "a {d}-dimensional field must use the euclidean domain"
                )))
            }
            _ => {}
        }
        let vector = |name: &str, v: &VectorSpec| -> Result<Vec<Expression>, FieldError> {
            let texts: Vec<&str> = match v {
                VectorSpec::Scalar(s) if d == 1 => vec![s.as_str()],
                VectorSpec::Scalar(_) => {
                    return Err(FieldError::Invalid(format!(
                        "{name} must have {d} components"
                    )))
                }
                VectorSpec::Components(c) => c.iter().map(String::as_str).collect(),
            };
            if texts.len() != d {
                return Err(FieldError::Invalid(format!(
                    "{name} has {} components, expected {d}",
                    texts.len()
                )));
            }
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let label = if d == 1 { name.to_string() } else { format!("{name}[{i}]") };
                    parse_component(label, t)
                })
                .collect()
        };
        let b = vector("b", &spec.b)?;
        let beta = vector("beta", &spec.beta)?;
        let c = match &spec.c {
            MatrixSpec::Scalar(s) => {
                let scalar = parse_component("c".into(), s)?;
                let zero = Expression::constant(0.0);
                let mut out = Vec::with_capacity(d * (d + 1) / 2);
                for i in 0..d {
                    for j in i..d {
                        out.push(if i == j { scalar.clone() } else { zero.clone() });
                    }
                }
                out
            }
            MatrixSpec::Rows(rows) => {
                if rows.len() != d {
                    return Err(FieldError::Invalid(format!(
                        "c has {} rows, expected {d}",
                        rows.len()
                    )));
                }
                let mut out = Vec::with_capacity(d * (d + 1) / 2);
                let mut full: Vec<Vec<Option<Expression>>> = vec![vec![None; d]; d];
                for (i, row) in rows.iter().enumerate() {
                    let offset = if row.len() == d - i {
                        i
                    } else if row.len() == d {
                        0
                    } else {
                        return Err(FieldError::Invalid(format!(
                            "row {i} of c has {} entries; give the upper triangle ({}) or the full row ({d})",
                            row.len(),
                            d - i
                        )));
                    };
                    for (k, text) in row.iter().enumerate() {
                        let j = offset + k;
                        full[i][j] = Some(parse_component(format!("c[{i}][{j}]"), text)?);
                    }
                }
                for i in 0..d {
                    for j in 0..i {
                        if let Some(lower) = &full[i][j] {
                            if Some(lower) != full[j][i].as_ref() {
                                return Err(FieldError::Invalid(format!(
                                    "c[{i}][{j}] does not mirror c[{j}][{i}]"
                                )));
                            }
                        }
                    }
                }
                for (i, row) in full.iter().enumerate() {
                    for entry in row.iter().skip(i) {
                        out.push(entry.clone().expect("upper triangle filled"));
                    }
                }
                out
            }
        };
        let x0 = match &spec.x0 {
            PointSpec::Scalar(v) => vec![*v],
            PointSpec::Components(v) => v.clone(),
        };
        if x0.len() != d {
            return Err(FieldError::Invalid(format!(
                "x0 has {} components, expected {d}",
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(FieldError::Invalid("x0 must be finite".into()));
        }
        if domain == Domain::PositiveHalfLine && x0[0] <= 0.0 {
            return Err(FieldError::Invalid("x0 must be positive on the half-line".into()));
        }
        for e in b.iter().chain(c.iter()).chain(beta.iter()) {
            if d > 1 && e.uses_scalar() {
                return Err(FieldError::Invalid(format!(
                    "'{}' uses the scalar variable x in a {d}-dimensional field; use x1..x{d}",
                    e.source()
                )));
            }
            if e.max_coord() > d {
                return Err(FieldError::Invalid(format!(
                    "'{}' references a coordinate beyond dimension {d}",
                    e.source()
                )));
            }
        }
        let field = CoefficientField {
            dimension: d,
            domain,
            b,
            c,
            beta,
            x0,
        };
        field.check_diffusion_at(&field.x0.clone(), 0.0)?;
        Ok(field)
    }

    /// Rebuild a field from expressions (used for derived fields).
    pub fn from_parts(
        domain: Domain,
        b: Vec<Expression>,
        c_upper: Vec<Expression>,
        beta: Vec<Expression>,
        x0: Vec<f64>,
    ) -> Result<CoefficientField, FieldError> {
        let d = b.len();
        if beta.len() != d || c_upper.len() != d * (d + 1) / 2 || x0.len() != d {
            return Err(FieldError::Invalid("inconsistent component counts".into()));
        }
        Ok(CoefficientField {
            dimension: d,
            domain,
            b,
            c: c_upper,
            beta,
            x0,
        })
    }

    /// Textual form suitable for a configuration echo.
    pub fn to_spec(&self) -> FieldSpec {
        let d = self.dimension;
        let vector = |v: &[Expression]| {
            if d == 1 {
                VectorSpec::Scalar(v[0].source().to_string())
            } else {
                VectorSpec::Components(v.iter().map(|e| e.source().to_string()).collect())
            }
        };
        let c = if d == 1 {
            MatrixSpec::Scalar(self.c[0].source().to_string())
        } else {
            let mut rows = Vec::new();
            for i in 0..d {
                rows.push(
                    (i..d)
                        .map(|j| self.c[upper_index(d, i, j)].source().to_string())
                        .collect(),
                );
            }
            MatrixSpec::Rows(rows)
        };
        FieldSpec {
            dimension: Some(d),
            domain: Some(self.domain),
            b: vector(&self.b),
            c,
            beta: vector(&self.beta),
            x0: if d == 1 {
                PointSpec::Scalar(self.x0[0])
            } else {
                PointSpec::Components(self.x0.clone())
            },
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn b(&self) -> &[Expression] {
        &self.b
    }

    pub fn beta(&self) -> &[Expression] {
        &self.beta
    }

    /// Entry `(i, j)` of the diffusion matrix.
    pub fn c_entry(&self, i: usize, j: usize) -> &Expression {
        &self.c[upper_index(self.dimension, i, j)]
    }

    pub fn c_upper(&self) -> &[Expression] {
        &self.c
    }

    pub fn with_x0(&self, x0: Vec<f64>) -> Result<CoefficientField, FieldError> {
        if x0.len() != self.dimension {
            return Err(FieldError::Invalid("x0 dimension mismatch".into()));
        }
        let mut f = self.clone();
        f.x0 = x0;
        Ok(f)
    }

    pub fn with_beta(&self, beta: Vec<Expression>) -> Result<CoefficientField, FieldError> {
        CoefficientField::from_parts(self.domain, self.b.clone(), self.c.clone(), beta, self.x0.clone())
    }

    pub fn beta_is_syntactically_zero(&self) -> bool {
        self.beta.iter().all(Expression::is_syntactically_zero)
    }

    pub fn is_time_dependent(&self) -> bool {
        self.b
            .iter()
            .chain(self.c.iter())
            .chain(self.beta.iter())
            .any(Expression::depends_on_time)
    }

    /// Drift under the dominated law: `b + c beta`, as expressions.
    pub fn dominated_drift(&self) -> Vec<Expression> {
        let d = self.dimension;
        (0..d)
            .map(|i| {
                let mut acc = self.b[i].clone();
                for j in 0..d {
                    let cb = self.c_entry(i, j).mul(&self.beta[j]);
                    if !cb.is_syntactically_zero() {
                        acc = acc.add(&cb);
                    }
                }
                acc
            })
            .collect()
    }

    /// Roles swapped: the dominated law becomes the reference law, so the
    /// new drift is `b + c beta` and the new perturbation is `-beta`.
    pub fn swapped(&self) -> CoefficientField {
        CoefficientField {
            dimension: self.dimension,
            domain: self.domain,
            b: self.dominated_drift(),
            c: self.c.clone(),
            beta: self.beta.iter().map(Expression::neg).collect(),
            x0: self.x0.clone(),
        }
    }

    pub fn eval_b(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.b) {
            *o = e.eval(x, t)?;
        }
        Ok(())
    }

    pub fn eval_beta(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.beta) {
            *o = e.eval(x, t)?;
        }
        Ok(())
    }

    /// Full symmetric `d x d` matrix, row-major.
    pub fn eval_c(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<(), EvalError> {
        let d = self.dimension;
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                let v = self.c[k].eval(x, t)?;
                out[i * d + j] = v;
                out[j * d + i] = v;
                k += 1;
            }
        }
        Ok(())
    }

    /// `<beta, c beta>` at a point.
    pub fn energy(&self, x: &[f64], t: f64) -> Result<f64, EvalError> {
        let d = self.dimension;
        let mut beta = vec![0.0; d];
        let mut c = vec![0.0; d * d];
        self.eval_beta(x, t, &mut beta)?;
        self.eval_c(x, t, &mut c)?;
        Ok(quadratic_form(&c, &beta, d))
    }

    pub fn b1(&self, x: f64) -> Result<f64, EvalError> {
        self.b[0].eval1(x)
    }

    pub fn c1(&self, x: f64) -> Result<f64, EvalError> {
        self.c[0].eval1(x)
    }

    pub fn beta1(&self, x: f64) -> Result<f64, EvalError> {
        self.beta[0].eval1(x)
    }

    /// `b + c beta` for `d = 1`.
    pub fn dominated_drift1(&self, x: f64) -> Result<f64, EvalError> {
        Ok(self.b1(x)? + self.c1(x)? * self.beta1(x)?)
    }

    /// Check `c > 0` (scalar) or positive definiteness (matrix) at a point.
    pub fn check_diffusion_at(&self, x: &[f64], t: f64) -> Result<(), FieldError> {
        let d = self.dimension;
        let mut c = vec![0.0; d * d];
        self.eval_c(x, t, &mut c).map_err(|source| FieldError::Eval {
            point: x.to_vec(),
            source,
        })?;
        if cholesky(&c, d).is_none() {
            return Err(FieldError::NotPositive {
                point: x.to_vec(),
                detail: if d == 1 {
                    format!("c = {:?}", c[0])
                } else {
                    "matrix is not positive definite".into()
                },
            });
        }
        Ok(())
    }
}

/// `<v, m v>` for a row-major `d x d` matrix.
pub fn quadratic_form(m: &[f64], v: &[f64], d: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..d {
        let mut row = 0.0;
        for j in 0..d {
            row += m[i * d + j] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}

/// Lower-triangular `L` with positive diagonal and `L L^T = m`, row-major.
/// `None` when `m` is not positive definite.
pub fn cholesky(m: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    cholesky_into(m, d, &mut l).then_some(l)
}

/// [`cholesky`] into a caller-provided buffer; `false` when `m` is not
/// positive definite.
pub fn cholesky_into(m: &[f64], d: usize, l: &mut [f64]) -> bool {
    if d == 1 {
        l[0] = m[0].sqrt();
        return m[0] > 0.0 && m[0].is_finite();
    }
    for i in 0..d {
        for j in 0..=i {
            let mut s = m[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return false;
                }
                l[i * d + i] = s.sqrt();
            } else {
                l[i * d + j] = s / l[j * d + j];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upper_triangle_is_mirrored() {
        let f = CoefficientField::euclidean(
            &["0", "0"],
            &[&["2", "x1"], &["3"]],
            &["0", "0"],
            &[0.1, 0.0],
        )
        .unwrap();
        let mut c = [0.0; 4];
        f.eval_c(&[0.5, 0.0], 0.0, &mut c).unwrap();
        assert_eq!(c, [2.0, 0.5, 0.5, 3.0]);
    }

    #[test]
    fn full_rows_must_mirror() {
        let bad = CoefficientField::euclidean(
            &["0", "0"],
            &[&["2", "x1"], &["x2", "3"]],
            &["0", "0"],
            &[0.0, 0.0],
        );
        assert!(matches!(bad, Err(FieldError::Invalid(_))));
        let good = CoefficientField::euclidean(
            &["0", "0"],
            &[&["2", "x1"], &["x1", "3"]],
            &["0", "0"],
            &[0.0, 0.0],
        );
        assert!(good.is_ok());
    }

    #[test]
    fn rejects_nonpositive_diffusion_at_start() {
        let f = CoefficientField::one_dimensional(Domain::RealLine, "0", "x^2", "0", 0.0);
        assert!(matches!(f, Err(FieldError::NotPositive { .. })));
    }

    #[test]
    fn scalar_variable_forbidden_in_vector_fields() {
        let f = CoefficientField::euclidean_isotropic(&["x", "0"], "1", &["0", "0"], &[1.0, 0.0]);
        assert!(matches!(f, Err(FieldError::Invalid(_))));
    }

    #[test]
    fn swapped_roles() {
        let f = CoefficientField::one_dimensional(Domain::RealLine, "0", "2", "x^3", 0.0).unwrap();
        let s = f.swapped();
        assert_eq!(s.b1(1.5).unwrap(), 2.0 * 1.5f64.powi(3));
        assert_eq!(s.beta1(1.5).unwrap(), -(1.5f64.powi(3)));
        assert_eq!(s.swapped().b1(0.7).unwrap(), f.b1(0.7).unwrap() + 0.0);
    }

    #[test]
    fn cholesky_factor() {
        let m = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky(&m, 2).unwrap();
        assert_eq!(l[0], 2.0);
        assert_eq!(l[1], 0.0);
        assert!((l[2] * l[2] + l[3] * l[3] - 3.0).abs() < 1e-15);
        assert!(cholesky(&[1.0, 2.0, 2.0, 1.0], 2).is_none());
    }
}
