use thiserror::Error;

/// Errors raised by the bound computations, the pattern designer and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum CrbError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },

    #[error("pattern `{0}` does not satisfy the constant-modulus constraint")]
    NonConstantModulus(String),

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("Fisher information matrix is singular or indefinite: {0}")]
    SingularFim(String),

    #[error("angle index {index} (psi = {psi}) is unidentifiable: Fisher density {density:.3e} below threshold")]
    Unidentifiable { index: usize, psi: f64, density: f64 },

    #[error("degenerate objective: denominator {value:.3e} at look-angle {index}")]
    DegenerateObjective { index: usize, value: f64 },

    #[error("empty path list")]
    EmptyPaths,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CrbError>;
