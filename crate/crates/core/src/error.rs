use thiserror::Error;

use crate::blockdata::ValidationReport;
use crate::linalg::NormTag;

/// Errors raised by the EHLCP solvers and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0}")]
    Invalid(ValidationReport),

    #[error("matrix M is singular (pivot {pivot} is numerically zero)")]
    SingularM { pivot: usize },

    #[error("singular matrix (pivot {pivot} is numerically zero)")]
    Singular { pivot: usize },

    #[error("tuple is infeasible: {0}")]
    InfeasibleTuple(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("enumeration needs {required} evaluations but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("diagonal entry {index} of block {block} is not positive")]
    NonpositiveDiagonal { block: usize, index: usize },

    #[error("norm mismatch: constants are in the {constants} norm, requested {requested}")]
    NormMismatch { constants: NormTag, requested: NormTag },

    #[error("no omega selection rule applies to this matrix")]
    NoRuleApplies,

    #[error("selection combination is singular (condition estimate {condition:e})")]
    SingularSelection { condition: f64, lambdas: Vec<Vec<f64>> },

    #[error("order {n} exceeds the limit {limit} for this dense computation")]
    TooLarge { n: usize, limit: usize },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
