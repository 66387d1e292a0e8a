use thiserror::Error;

/// Errors raised by constructors and numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is empty")]
    Empty,

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension {dim} exceeds the supported maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("entry count {found} does not match shape {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("not Hermitian: max deviation {deviation:.3e} exceeds bound {bound:.0e}")]
    NotHermitian { deviation: f64, bound: f64 },

    #[error("trace is {trace} (must be 1 within {bound:.0e})")]
    TraceNotOne { trace: f64, bound: f64 },

    #[error("not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below -{bound:.0e}")]
    NotPositive { min_eigenvalue: f64, bound: f64 },

    #[error("state vector norm {norm} differs from 1 by more than {bound:.0e}")]
    NotNormalized { norm: f64, bound: f64 },

    #[error("basis is not orthonormal: max deviation {deviation:.3e} exceeds bound {bound:.0e}")]
    NotOrthonormal { deviation: f64, bound: f64 },

    #[error("supplied basis does not diagonalize the observable: residual {residual:.3e}")]
    NotEigenbasis { residual: f64 },

    #[error("not unitary: max deviation {deviation:.3e} exceeds bound {bound:.0e}")]
    NotUnitary { deviation: f64, bound: f64 },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("Kraus operators are not trace preserving: residual {residual:.3e} exceeds bound {bound:.0e}")]
    TraceNotPreserved { residual: f64, bound: f64 },

    #[error("free channel maps eigenstate {index} to a non-classical state (off-diagonal {off_diagonal:.3e})")]
    ClassicalityViolated { index: usize, off_diagonal: f64 },

    #[error("free-channel sampling failed after {cap} resamples")]
    SamplingFailed { cap: usize },

    #[error(
        "singular outcome {index}: probability {probability:.3e} with derivative {derivative:.3e}"
    )]
    SingularOutcome {
        index: usize,
        probability: f64,
        derivative: f64,
    },

    #[error(
        "closed form is undefined at theta={theta}, alpha={alpha} (removable singularity, limit value 4)"
    )]
    RemovableSingularity { theta: f64, alpha: f64 },

    #[error("finite-difference step h={h} outside (0, 0.1]")]
    InvalidStep { h: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
