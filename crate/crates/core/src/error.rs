use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes or axis names do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A probability vector or stochastic matrix failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// Scalar argument outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input is well formed but the requested computation does not apply.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Configuration the implementation refuses to handle.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Work-size guard tripped (grid too large, too many LLR bins, ...).
    #[error("size guard: {0}")]
    Guard(String),
}

pub type Result<T> = std::result::Result<T, Error>;
