use thiserror::Error;

/// Errors surfaced by validation and numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {context}")]
    DimMismatch { context: String },

    /// Hermiticity deviations up to 1e-8 are repaired by symmetrization;
    /// anything larger is treated as a caller bug.
    #[error("matrix not Hermitian: max |A - Aadj| = {deviation:.3e} exceeds {limit:.1e}")]
    NotHermitian { deviation: f64, limit: f64 },

    #[error("dimension {dim} exceeds configured limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    #[error("invalid tensor factorization: {context}")]
    BadFactorization { context: String },

    #[error("invalid projector set: {context}")]
    BadProjectors { context: String },

    #[error("state not normalized: norm = {norm}")]
    NotNormalized { norm: f64 },

    #[error("trace must be 1 within {tol:.1e}, got {trace}")]
    BadTrace { trace: f64, tol: f64 },

    #[error("grid too coarse or odd: n = {n}, need even n >= {min}")]
    BadGrid { n: usize, min: usize },

    #[error("linear solve failed: {context}")]
    Singular { context: String },

    #[error("unsupported: {context}")]
    Unsupported { context: String },

    #[error("no solution found: {context}")]
    NoSolution { context: String },

    #[error("{context}")]
    Invalid { context: String },
}

pub type Result<T> = std::result::Result<T, Error>;
