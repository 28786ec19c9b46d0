use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix dimension {matrix_dim} does not match subsystem shape {dims:?}")]
    ShapeMismatch { matrix_dim: usize, dims: Vec<usize> },

    #[error("state shape {state:?} does not match expected shape {expected:?}")]
    StateShapeMismatch { state: Vec<usize>, expected: Vec<usize> },

    #[error("subsystem {subsystem} out of range (subsystems are numbered 1..={count})")]
    SubsystemOutOfRange { subsystem: usize, count: usize },

    #[error("invalid subsystem shape {dims:?}: need at least one subsystem, every local dimension >= 2")]
    InvalidShape { dims: Vec<usize> },

    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds tolerance {tolerance:.1e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("trace is {trace} instead of 1")]
    InvalidTrace { trace: f64 },

    #[error("matrix is not positive semidefinite: minimum eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("invalid rank {rank}: must lie in 1..={dim}")]
    InvalidRank { rank: usize, dim: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment circuits need at least two copies, got k = {0}: the first moment is fixed at 1 by trace preservation")]
    TooFewCopies(usize),

    #[error("partial-transpose moments are defined for bipartite shapes only, got {0} subsystems")]
    NotBipartite(usize),

    #[error("dense backend dimension {dim} exceeds cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("contraction cost {cost} multiply-adds exceeds cap {cap}")]
    CostCapExceeded { cost: u128, cap: u128 },

    #[error("invalid permutation {perm:?}: not a bijection on 1..={n}")]
    InvalidPermutation { perm: Vec<usize>, n: usize },

    #[error("invalid moment vector: {0}")]
    InvalidMoments(String),

    #[error("spectrum reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
