use thiserror::Error;

use crate::algebra::Theta;

#[derive(Debug, Error)]
pub enum Error {
    #[error("deformation parameters differ: {0} vs {1}")]
    ThetaMismatch(Theta, Theta),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("input rejected at index {index}: {reason}")]
    Input { index: usize, reason: String },

    #[error("theta {0} is not rational; use the convergent ladder")]
    IrrationalTheta(Theta),

    #[error("search budget of {budget} exhausted ({detail})")]
    Budget { budget: u64, detail: String },

    #[error("insufficient precision: {0}")]
    Precision(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
