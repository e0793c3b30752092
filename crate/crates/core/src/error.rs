//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the library.
///
/// Diagnostics are stored as `f64`/`usize` regardless of the scalar type the
/// computation ran with, so the error type stays non-generic.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A trajectory left the finite range the integrator accepts.
    #[error("state diverged at t = {time} (step {step})")]
    Divergence { time: f64, step: usize },

    /// A matrix could not be factorized even at the largest jitter level.
    #[error("factorization failed after jitter up to {max_jitter:e}")]
    IllConditioned { max_jitter: f64 },

    /// The trend design matrix is rank deficient.
    #[error("trend basis is rank deficient on the given inputs")]
    DegenerateTrend,

    /// No hyperparameter start produced an evaluable objective.
    #[error("hyperparameter search failed: {0}")]
    FitFailed(String),

    /// Every realisation in an ensemble diverged.
    #[error("all {count} rollouts diverged; first failure at step {first_step}")]
    EnsembleFailed { count: usize, first_step: usize },

    /// Model file could not be parsed.
    #[error("model file error: {0}")]
    ModelFormat(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;
