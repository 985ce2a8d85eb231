use thiserror::Error;

use crate::linalg::MatrixClass;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CocycleError {
    #[error("matrix has a non-finite entry")]
    InvalidMatrix,

    #[error("expected a rank-one matrix, found {0:?}")]
    RankError(MatrixClass),

    #[error("the zero matrix has no projective action")]
    ZeroMatrix,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("transition matrix is not primitive")]
    Primitivity,

    #[error("renewal block exceeded the cap of {cap} draws")]
    BlockCapExceeded { cap: u64 },

    #[error("word-sum budget of {budget} terms exceeded")]
    BudgetExceeded { budget: u64 },

    #[error("variance {sigma2} is at or below the degeneracy threshold {threshold}")]
    DegenerateVariance { sigma2: f64, threshold: f64 },

    #[error("invalid cocycle specification: {0}")]
    InvalidSpec(String),

    #[error("measure was built from a different cocycle")]
    MeasureMismatch,
}

pub type Result<T> = std::result::Result<T, CocycleError>;
