use thiserror::Error;

/// Errors raised by the geometry, solver and flow layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate metric at node {node}: det g = {det:e}")]
    DegenerateMetric { node: usize, det: f64 },

    #[error("fields live on different arenas ({left} vs {right})")]
    ArenaMismatch { left: String, right: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("weighted operator is not invertible: spectral gap {gap:e} <= 0")]
    NotInvertible { gap: f64 },

    #[error("step size underflow at t = {t}: dt = {dt:e} ({reason})")]
    StepUnderflow { t: f64, dt: f64, reason: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("time {t} lies outside the remapped domain")]
    OutsideDomain { t: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-positive potential weight: min w = {min:e}")]
    NonPositive { min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
