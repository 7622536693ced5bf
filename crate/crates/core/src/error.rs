use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("dimension {0} exceeds the cap of {cap}", cap = crate::linalg::MAX_DIM)]
    DimensionTooLarge(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unsupported Schatten exponent {0}")]
    UnsupportedSchatten(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),
    #[error("measurement is not projective: {0}")]
    NotProjective(String),
    #[error("support leaks outside the truncation by {0:e}")]
    SupportLeakage(f64),
    #[error("bound violated: {0}")]
    BoundViolated(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that describe a violated mathematical invariant rather
    /// than a malformed input.
    pub fn is_violation(&self) -> bool {
        matches!(self, Error::BoundViolated(_))
    }

    pub fn is_incompatibility(&self) -> bool {
        matches!(self, Error::Incompatible(_) | Error::DimensionMismatch(_))
    }
}
