//! Decide whether the Girsanov density between two diffusions is a true
//! martingale (local absolute continuity) or a uniformly integrable one
//! (absolute continuity), from the coefficients alone, and check the answer
//! with a Monte Carlo simulation of both laws up to explosion.
//!
//! Module map:
//! - [`expr`]: coefficient expressions and fields
//! - [`quad`]: adaptive quadrature with divergence detection
//! - [`scale`]: scale functions and boundary accessibility
//! - [`classify1d`]: the one-dimensional integral tests
//! - [`radial`]: radial reductions of multi-dimensional fields
//! - [`sufficiency`]: growth and bounded-energy sufficient conditions
//! - [`mc`]: Euler simulation of the density process
//! - [`harness`]: run configuration, reports and the CLI driver

// Negated comparisons deliberately send NaN down the rejecting branch, and
// the quadrature tables keep their published digits, and index loops follow
// matrix notation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod classify1d;
pub mod expr;
pub mod extended_float;
pub mod harness;
pub mod mc;
pub mod quad;
pub mod radial;
pub mod scale;
pub mod sufficiency;
pub mod tri;

pub use tri::Tri;
