use thiserror::Error;

/// Failures raised while evaluating operators, moments and experiments.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("truncation window exceeded {cap} terms at n = {n}, c = {c}, x = {x}")]
    TruncationCap { cap: u64, n: f64, c: f64, x: f64 },

    #[error("quadrature did not converge for n = {n}, k = {k} (error estimate {error_estimate:e})")]
    NonConvergent { n: f64, k: u64, error_estimate: f64 },

    #[error("integrand `{label}` is not finite at t = {t}")]
    Domain { label: String, t: f64 },

    #[error("growth rate {growth} of `{label}` is not below n = {n}")]
    Growth { label: String, growth: f64, n: f64 },

    #[error("`{label}` supplies {available} derivatives but order {required} was requested")]
    MissingDerivative {
        label: String,
        available: usize,
        required: usize,
    },

    #[error("operator MGF has a pole: theta = {theta}, x = {x}, n = {n}, c = {c}")]
    Pole { theta: f64, x: f64, n: f64, c: f64 },

    #[error("Steklov step h = {h} samples [{lo}, {hi}] outside the outer interval")]
    HTooLarge { h: f64, lo: f64, hi: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
