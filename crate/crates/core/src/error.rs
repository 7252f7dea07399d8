use thiserror::Error;

/// Failure categories shared by every stage of the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or non-finite input data, or a degenerate design.
    #[error("input error: {0}")]
    Input(String),
    /// A parameter outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A numerical routine failed (non-convergence, singular factorization).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The structural model is outside its stability region.
    #[error("model error: {0}")]
    Model(String),
    /// A function evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A Monte Carlo experiment produced no usable replications.
    #[error("experiment error: {0}")]
    Experiment(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
