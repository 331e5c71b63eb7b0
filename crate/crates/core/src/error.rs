use thiserror::Error;

/// Errors produced by the memory-cost pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates an operation's precondition.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// The request exceeds a size guard (dense eigensolver, circuit budget, ...).
    #[error("capability error: {0}")]
    Capability(String),

    /// The model has no pointwise density or otherwise lacks the feature.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An analytic bound was requested outside the range where its derivation holds.
    #[error("validity error: {0}")]
    Validity(String),

    /// Unitary completion failed.
    #[error("construction error: {0}")]
    Construction(String),

    /// A computed quantity broke an invariant it must satisfy (e.g. a clearly negative eigenvalue).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
