use thiserror::Error;

/// Errors raised by the analytic and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("quadrature did not reach tolerance after {panels} panels (estimate {estimate:e}, error {error:e})")]
    NonConvergedQuadrature {
        panels: usize,
        estimate: f64,
        error: f64,
    },

    #[error("fixed-point iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("target does not change sign on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("no blow-up of y* found below lambda = {limit}")]
    NotFound { limit: f64 },

    #[error("final-size histogram has no minor/major separation")]
    DegenerateHistogram,
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidConfig(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
