use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("`{label}` evaluated to a non-finite value at x = {node}")]
    Evaluation { label: String, node: f64 },

    #[error("`{label}` is not a tangent: mean {mean:e} exceeds tolerance")]
    InvalidTangent { label: String, mean: f64 },

    #[error("gram matrix is rank deficient (eigenvalue {eigenvalue:e}, condition number {condition:e})")]
    RankDeficient { eigenvalue: f64, condition: f64 },

    #[error("gram matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("numerical failure: {reason}")]
    NumericalFailure { reason: String, best: Vec<f64> },

    #[error("invalid path: {reason}")]
    InvalidPath { reason: String, min_n: Option<u64> },

    #[error("cannot sample along `{label}`: tangent has no sup bound")]
    CannotSample { label: String },

    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("condition not met: {0}")]
    ConditionNotMet(String),

    #[error("test premise violated: {0}")]
    PremiseViolated(String),

    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),

    #[error("base measure is not symmetric at x = {x}: density {left} vs {right}")]
    SymmetryViolation { x: f64, left: f64, right: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty data")]
    EmptyData,
}
