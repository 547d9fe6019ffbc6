use thiserror::Error;

/// Errors raised by the numerical toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Invalid configuration (grid sizes, radii, parameters).
    #[error("configuration error: {0}")]
    Config(String),
    /// Fields that live on different grids or in different angular modes were combined.
    #[error("structural error: {0}")]
    Structural(String),
    /// An operation's precondition is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Not enough spectral data to answer a query.
    #[error("range error: {0}")]
    Range(String),
    /// A concentration scale is too small for the grid to resolve.
    #[error("resolution error: {0}")]
    Resolution(String),
    /// A linear solve or eigensolve failed.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// An iterative search (critical-point search, fit) gave up.
    #[error("search failure: {0}")]
    Search(String),
}

pub type Result<T> = std::result::Result<T, Error>;
