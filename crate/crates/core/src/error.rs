use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LseError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("density generator is not integrable in dimension {dim}: {reason}")]
    NonIntegrableGenerator { dim: usize, reason: String },
    #[error("integrand is not finite at node {node}")]
    Integrability { node: f64 },
    #[error("unsupported alpha/beta map: {0}")]
    UnsupportedMap(String),
    #[error("unsupported generator: {0}")]
    UnsupportedGenerator(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular transform: {0}")]
    SingularTransform(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix of size {0} exceeds the copositivity size limit of {1}")]
    SizeLimit(usize, usize),
    #[error("distributions are not comparable: {0}")]
    IncomparableFamilies(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, LseError>;
