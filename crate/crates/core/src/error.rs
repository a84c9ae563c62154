use thiserror::Error;

/// Errors raised by measures, chains and the exact oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition (size mismatch,
    /// membership violation, bad shape).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The request is well-formed but mathematically undefined, e.g. a ratio
    /// taken from a zero-weight state.
    #[error("domain error: {0}")]
    Domain(String),

    /// A kernel or matrix failed validation.
    #[error("validation failed: {0}")]
    Validation(String),

    /// A numerical routine failed (eigendecomposition, factorization).
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The instance is too large for an exhaustive routine.
    #[error("size limit exceeded: {0}")]
    Size(String),

    /// No positive-weight initial state could be found.
    #[error("initialization failed: {0}")]
    Init(String),

    /// An exact consistency check (lumpability, stochasticity) failed.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// A distance never fell below the requested threshold.
    #[error("did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn arg<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
