use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(&'static str),
    /// Inconsistent or invalid configuration.
    #[error("configuration error: {0}")]
    Config(&'static str),
    /// A parameter vector violates the search box.
    #[error("validation error: parameter {index} = {value} is outside [{lo}, {hi}]")]
    Parameter { index: usize, value: f64, lo: f64, hi: f64 },
    /// The scaling dynamics collapsed or produced a non-finite state.
    #[error("dynamics blow-up at t = {t} s")]
    Blowup { t: f64 },
    /// Cholesky factorization failed even with maximum jitter.
    #[error("covariance matrix is not positive definite (jitter up to {jitter})")]
    NotPositiveDefinite { jitter: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;
