use thiserror::Error;

/// Errors raised by the library.
///
/// Every validation failure names the condition that was violated so the CLI
/// can print it verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty matrix")]
    EmptyMatrix,

    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("tensor product dimension {dim} exceeds the limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("not bipartite: factor dimensions are unset")]
    NotBipartite,

    #[error("factor split {d_a}x{d_b} is not square")]
    NonSquareSplit { d_a: usize, d_b: usize },

    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("not trace-preserving: {0}")]
    NotTracePreserving(String),

    #[error("not trace-preserving Choi: {0}")]
    NotTracePreservingChoi(String),

    #[error("malformed Choi operator: {0}")]
    MalformedChoi(String),

    #[error("not symmetric (max deviation {deviation:.3e})")]
    NotSymmetric { deviation: f64 },

    #[error("marginal condition violated: {0}")]
    MarginalCondition(String),

    #[error("negative entry {value:.3e} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("dephasing out of range: {0}")]
    DephasingOutOfRange(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
