//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian (max |M - M†| = {deviation:.3e}, tolerance {tol:.1e})")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("not a density state: {0}")]
    NotDensity(String),

    #[error("invalid subsystem subset: {0}")]
    InvalidSubset(String),

    #[error("invalid basis index: {0}")]
    InvalidIndex(String),

    #[error("marginal set is inconsistent: max overlap deviation {max_deviation:.3e}")]
    InconsistentMarginals { max_deviation: f64 },

    #[error("operation requires all (n-1)-party marginals, but the set is partial")]
    PartialMode,

    #[error("no marginal entry covers subset {0:?}")]
    SubsetNotCovered(Vec<usize>),

    #[error("SDP solver failed: {0}")]
    Solver(String),

    #[error("operator is not of p-form (max coefficient violation {violation:.3e})")]
    NotPForm { violation: f64 },

    #[error("operator tuple is not a compatibility witness (min eig of p(W) = {min_eig:.3e})")]
    NotWitness { min_eig: f64 },

    #[error("witness has zero p-form trace; cannot normalize")]
    ZeroTrace,

    #[error("witness is already tangential (min eig {min_eig:.3e}); nothing to refine")]
    AlreadyTangential { min_eig: f64 },

    #[error("refinement direction is invalid: {0}")]
    InvalidRefinement(String),

    #[error("identical-particle system is invalid: {0}")]
    InvalidParticleSystem(String),

    #[error("the requested verdict data is unavailable: {0}")]
    VerdictData(String),

    #[error("problem file is invalid: {0}")]
    ProblemFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
