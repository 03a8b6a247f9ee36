//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by mixture construction, parsing, and quadrature-backed
/// operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("mixture weights, means and variances must have equal nonzero length (got {weights}, {means}, {variances})")]
    LengthMismatch {
        weights: usize,
        means: usize,
        variances: usize,
    },

    #[error("mixture weights must sum to 1 within {tol:e} (sum = {sum})")]
    WeightsNotNormalized { sum: f64, tol: f64 },

    #[error("mixture weight {index} must be strictly positive (got {weight})")]
    NonPositiveWeight { index: usize, weight: f64 },

    #[error("component variance {index} must be at least {min:e} (got {variance})")]
    VarianceTooSmall {
        index: usize,
        variance: f64,
        min: f64,
    },

    #[error("parameter {index} must be finite (got {value})")]
    NonFiniteParameter { index: usize, value: f64 },

    #[error("alpha must lie in [0, 1] (got {0})")]
    AlphaOutOfRange(f64),

    #[error("gamma must be nonnegative (got {0})")]
    NegativeGamma(f64),

    #[error("gamma must be strictly positive (got {0})")]
    NonPositiveGamma(f64),

    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),

    #[error(
        "quadrature did not converge after {levels} levels: last = {last:.17e}, \
         previous = {previous:.17e}, |difference| = {est_error:.3e} > tol = {tol:.3e}"
    )]
    QuadratureDidNotConverge {
        last: f64,
        previous: f64,
        est_error: f64,
        tol: f64,
        levels: u32,
    },

    #[error("integrand returned a non-finite value ({value}) at {location} = {at}")]
    NonFiniteIntegrand {
        value: f64,
        location: &'static str,
        at: f64,
    },

    #[error("estimator second moment E[f(Y)^2] is not finite (got {0})")]
    DivergentEstimator(f64),

    #[error("mmse curve gammas must be strictly increasing at index {0}")]
    CurveGammasNotIncreasing(usize),

    #[error("mmse curve value at index {index} violates {bound} (value = {value})")]
    CurveValueOutOfBounds {
        index: usize,
        value: f64,
        bound: &'static str,
    },

    #[error("distribution JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
