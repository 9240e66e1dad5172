use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("underflow: {0}")]
    Underflow(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive definite after jitter {0:e}")]
    NotPositiveDefinite(f64),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("negative kriging variance {0:e}")]
    NegativeVariance(f64),
    #[error("column {0} of the sensitivity matrix is all zero")]
    ZeroColumn(usize),
    #[error("non-finite sensitivity at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("total variance is zero; shares are undefined")]
    ZeroVariance,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("empty grid")]
    EmptyGrid,
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable snake-case identifier used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Overflow(_) => "overflow",
            Error::Underflow(_) => "underflow",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::NegativeVariance(_) => "negative_variance",
            Error::ZeroColumn(_) => "zero_column",
            Error::NonFinite { .. } => "non_finite",
            Error::Evaluation(_) => "evaluation",
            Error::ZeroVariance => "zero_variance",
            Error::Config(_) => "config",
            Error::EmptyGrid => "empty_grid",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
