use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compat::CompatibilityReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("measures live on different spaces")]
    SpaceMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coupling chain mismatch after link {0}")]
    ChainMismatch(usize),

    #[error("product support has {size} tuples, budget is {budget}")]
    BudgetExceeded { size: u128, budget: u64 },

    #[error("measures are not compatible on the requested pairs (total excess {:.3e})", .0.max_pair_gap)]
    Incompatible(Box<CompatibilityReport>),

    #[error("the {0} family has no lift on continuous paths")]
    NoContinuousLift(&'static str),

    #[error("quantity `{quantity}` is not available for the {family} family")]
    UnsupportedQuantity { family: &'static str, quantity: String },

    #[error("linear program failed: {0}")]
    Solver(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse outcome classes, e.g. for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    /// A well-posed question with a negative answer: incompatible
    /// measures, no continuous lift.
    Negative,
    Input,
    /// Budget or solver limits.
    Resource,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Incompatible(_) | Error::NoContinuousLift(_) => ErrorClass::Negative,
            Error::BudgetExceeded { .. } | Error::Solver(_) => ErrorClass::Resource,
            _ => ErrorClass::Input,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
