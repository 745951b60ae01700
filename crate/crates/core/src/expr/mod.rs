//! Text expressions for the coefficient functions.
//!
//! Grammar: `+ - * / ^`, unary sign, numeric literals, the variables `x`,
//! `x1..xd` and `t`, the functions `exp log sqrt abs sign min max`, and
//! `piecewise(lhs < rhs, a, b)` (also `>`). Comparisons are strict, so at the
//! branch point the second branch is taken.
//!
//! Evaluation never returns NaN or infinity: a non-finite intermediate value is
//! a domain error.

mod ast;
mod compile;
mod field;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use ast::{BinOp, CmpOp, Condition, Func, Node, Var};
pub use field::{
    cholesky, cholesky_into, quadratic_form, CoefficientField, Domain, FieldError, FieldSpec, MatrixSpec, PointSpec,
    VectorSpec,
};

use compile::Program;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => {
                Some(*offset)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("non-finite result from {op}")]
    NonFinite { op: &'static str },
    #[error("dimension mismatch: expression needs {expected} coordinate(s), point has {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// A parsed, immutable expression. Equality compares trees, not source text.
#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    ast: Node,
    program: Program,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression, ParseError> {
        let ast = parse::Parser::parse(source)?;
        Ok(Expression::from_parts(source.to_string(), ast))
    }

    /// Build from a tree; the source text is the canonical printing.
    pub fn from_ast(ast: Node) -> Expression {
        Expression::from_parts(ast.to_string(), ast)
    }

    fn from_parts(source: String, ast: Node) -> Expression {
        let program = Program::compile(&ast);
        Expression {
            source,
            ast,
            program,
        }
    }

    pub fn constant(v: f64) -> Expression {
        Expression::from_ast(Node::Const(v))
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    pub fn eval(&self, point: &[f64], t: f64) -> Result<f64, EvalError> {
        self.program.eval(point, t)
    }

    /// Scalar convenience for one-dimensional, time-free use.
    pub fn eval1(&self, x: f64) -> Result<f64, EvalError> {
        self.program.eval(std::slice::from_ref(&x), 0.0)
    }

    pub fn simplified(&self) -> Expression {
        Expression::from_ast(self.ast.simplified())
    }

    /// True only when constant folding reduces the tree to the literal 0.
    /// `false` says nothing about being zero almost everywhere.
    pub fn is_syntactically_zero(&self) -> bool {
        matches!(self.ast.simplified(), Node::Const(v) if v == 0.0)
    }

    /// The folded value when the expression has no free variables.
    pub fn constant_value(&self) -> Option<f64> {
        match self.ast.simplified() {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn free_variables(&self) -> BTreeSet<String> {
        self.vars().into_iter().map(|v| v.name()).collect()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.ast.collect_vars(&mut out);
        out
    }

    pub fn depends_on_time(&self) -> bool {
        self.vars().contains(&Var::T)
    }

    /// Coordinates needed: 1 for `x`, the largest index for `xi`, 0 if none.
    pub fn uses_scalar(&self) -> bool {
        self.program.uses_scalar()
    }

    pub fn max_coord(&self) -> usize {
        self.program.max_coord()
    }

    /// `self * other` as a new tree (used to build composite coefficients).
    pub fn mul(&self, other: &Expression) -> Expression {
        Expression::from_ast(Node::binary(BinOp::Mul, self.ast.clone(), other.ast.clone()))
    }

    pub fn add(&self, other: &Expression) -> Expression {
        Expression::from_ast(Node::binary(BinOp::Add, self.ast.clone(), other.ast.clone()))
    }

    pub fn neg(&self) -> Expression {
        Expression::from_ast(Node::Neg(Box::new(self.ast.clone())))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast)
    }
}

impl std::str::FromStr for Expression {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

impl Serialize for Expression {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.source)
    }
}

impl<'de> Deserialize<'de> for Expression {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Expression::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Parse a string, panicking on error. For literals in tests and examples.
pub fn expr(source: &str) -> Expression {
    Expression::parse(source).unwrap_or_else(|e| panic!("bad expression {source:?}: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        // 2*0 + exp(0) is 1; at x = 1 the value is 2 + 1/e.
        assert_eq!(expr("2*x + exp(-x^2)").eval1(0.0).unwrap(), 1.0);
        assert_eq!(expr("2*x + exp(-x^2)").eval1(1.0).unwrap(), 2.0 + (-1.0f64).exp());
        assert_eq!(expr("piecewise(x<0, -1, 1)").eval1(-2.0).unwrap(), -1.0);
        assert_eq!(expr("x^3").eval1(2.0).unwrap(), 8.0);
        assert_eq!(expr("sqrt(x)").eval1(4.0).unwrap(), 2.0);
    }

    #[test]
    fn dangling_operator_reports_offset() {
        let err = Expression::parse("2*").unwrap_err();
        assert_eq!(err.offset(), Some(2), "{err}");
    }

    #[test]
    fn unknown_names_are_rejected() {
        assert!(matches!(
            Expression::parse("y + 1"),
            Err(ParseError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            Expression::parse("sin(x)"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        assert!(Expression::parse("x0").is_err());
        assert!(Expression::parse("").is_err());
    }

    #[test]
    fn domain_errors_instead_of_nan() {
        assert!(matches!(expr("1/x").eval1(0.0), Err(EvalError::Domain { .. })));
        assert!(matches!(expr("log(x)").eval1(-1.0), Err(EvalError::Domain { .. })));
        assert!(matches!(expr("sqrt(x)").eval1(-1.0), Err(EvalError::Domain { .. })));
        assert!(matches!(expr("exp(x)").eval1(1000.0), Err(EvalError::NonFinite { .. })));
        assert!(matches!(expr("x^0.5").eval1(-1.0), Err(EvalError::NonFinite { .. })));
    }

    #[test]
    fn untaken_branch_is_not_evaluated() {
        let e = expr("piecewise(x < 0, 0, sqrt(x))");
        assert_eq!(e.eval1(-4.0).unwrap(), 0.0);
        assert_eq!(e.eval1(4.0).unwrap(), 2.0);
    }

    #[test]
    fn branch_point_takes_second_branch() {
        assert_eq!(expr("piecewise(x < 0, -1, 1)").eval1(0.0).unwrap(), 1.0);
        assert_eq!(expr("piecewise(x > 0, -1, 1)").eval1(0.0).unwrap(), 1.0);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(expr("-x^2").eval1(3.0).unwrap(), -9.0);
        assert_eq!(expr("2^3^2").eval1(0.0).unwrap(), 512.0);
        assert_eq!(expr("8/4/2").eval1(0.0).unwrap(), 1.0);
        assert_eq!(expr("2^-1").eval1(0.0).unwrap(), 0.5);
        assert_eq!(expr("1e-3*1E3").eval1(0.0).unwrap(), 1.0);
    }

    #[test]
    fn syntactic_zero() {
        assert!(expr("0").is_syntactically_zero());
        assert!(expr("x - x").is_syntactically_zero());
        assert!(expr("0*exp(x)").is_syntactically_zero());
        assert!(expr("piecewise(x<1, 0, 0)").is_syntactically_zero());
        assert!(!expr("x^2").is_syntactically_zero());
        assert!(!expr("1/x - 1/x + 1e-300").is_syntactically_zero());
    }

    #[test]
    fn free_variable_sets() {
        let names = |s: &str| expr(s).free_variables().into_iter().collect::<Vec<_>>();
        assert_eq!(names("2*x+t"), vec!["t", "x"]);
        assert!(names("3.5").is_empty());
        assert_eq!(names("x1*x2"), vec!["x1", "x2"]);
    }

    #[test]
    fn vector_points() {
        let e = expr("x1*x2 + x3");
        assert_eq!(e.eval(&[2.0, 3.0, 1.0], 0.0).unwrap(), 7.0);
        assert!(matches!(
            e.eval(&[2.0, 3.0], 0.0),
            Err(EvalError::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            expr("x").eval(&[1.0, 2.0], 0.0),
            Err(EvalError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn printing_reparses_to_same_tree() {
        for s in ["2*x + exp(-x^2)", "piecewise(x<0, -1, 1)", "-x^-2", "min(x, 1e-7)*t", "+x"] {
            let e = expr(s);
            assert_eq!(expr(&e.to_string()), e, "{s}");
        }
    }
}
