use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not hermitian (|H - H^dagger|_F = {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("vectors are linearly dependent (residual {residual:e} at vector {index})")]
    RankDeficient { index: usize, residual: f64 },

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("expected {expected} entries, got {got}")]
    BadShape { expected: usize, got: usize },

    #[error("basis is not orthonormal (|B^dagger B - I|_F = {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("degenerate spectrum: eigenvalue gap {gap:e} below threshold {threshold:e}; add commuting observables")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("observables {first} and {second} do not commute (|[A,B]|_F = {norm:e})")]
    NotCommuting { first: usize, second: usize, norm: f64 },

    #[error("joint spectrum is degenerate: {0} joint eigenvectors share a label")]
    DegenerateJointSpectrum(usize),

    #[error("empty input")]
    EmptyInput,

    #[error("unknown context '{0}'")]
    UnknownContext(String),

    #[error("context '{0}' is already registered with a different basis")]
    DuplicateContext(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("bad dimension {0}")]
    BadDimension(usize),

    #[error("invalid doubly stochastic target: {0}")]
    InvalidTarget(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("'{0}' is not a nonnegative half-integer")]
    NotHalfInteger(String),

    #[error("spin {0} exceeds the supported maximum of 25")]
    TooLarge(String),

    #[error("rotation axis must be a unit vector (norm {norm})")]
    BadAxis { norm: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
