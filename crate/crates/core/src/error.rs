use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("gamma pole at z = {0}")]
    Pole(Complex64),

    #[error("{context}: no convergence (value {value:e}, error estimate {err_est:e})")]
    NoConvergence {
        context: String,
        value: f64,
        err_est: f64,
    },

    #[error("series did not converge within {terms} terms")]
    SeriesBudget { terms: usize },

    #[error("cancellation ratio {ratio:e} exceeds the threshold {limit:e}")]
    Cancellation { ratio: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Domain(String),

    #[error("tail model: {0}")]
    TailModel(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors that signal a violated precondition rather than a numerical failure.
    pub fn is_precondition(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Pole(_) | Error::TailModel(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
