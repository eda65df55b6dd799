//! Baskakov–Szász hybrid summation-integral operators.
//!
//! The operator is
//!
//! ```text
//! L_{n,c} f(x) = Σ_k p_{n,k}(x) ∫_0^∞ θ_{n,k}(t) f(t) dt
//! ```
//!
//! with a negative-binomial basis `p_{n,k}` in `x` and Erlang densities
//! `θ_{n,k}` in `t`. The crate evaluates it and its derivatives numerically,
//! builds its raw and central moments exactly as polynomials in `x`, provides
//! finite differences, moduli of smoothness and Steklov means, and runs the
//! convergence experiments in [`analysis`].

pub mod analysis;
pub mod basis;
pub mod config;
pub mod error;
pub mod function;
pub mod moments;
pub mod operator;
pub mod poly;
pub mod quadrature;
pub mod report;
pub mod smoothing;
pub mod special;

pub use basis::{BasisShift, OperatorParams, TruncationWindow};
pub use config::{EvalConfig, QuadratureConfig};
pub use error::{Error, Result};
pub use function::FunctionSpec;
pub use moments::{LambdaNorm, MomentKind, MomentPolynomial};
pub use operator::OperatorValue;
pub use poly::Polynomial;
pub use report::{ExperimentReport, ReportRow, Verdict};
pub use smoothing::{IntervalPair, SteklovMean};
