use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A copula parameter outside its family's parameter space.
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// An argument outside the domain of a function (e.g. density on the boundary).
    #[error("argument out of domain: {0}")]
    Domain(String),

    /// Quadrature, root finding or optimization failed to reach its tolerance.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Input data that cannot support the requested computation.
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// Too few observations for the requested computation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Caller violated a precondition of the API.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Malformed input file or configuration.
    #[error("parse error: {0}")]
    Parse(String),

    /// A configuration value that is syntactically valid but not allowed.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
