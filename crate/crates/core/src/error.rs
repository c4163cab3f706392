use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    /// One entry per offending item, so callers can report them all at once.
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("instance is not monotone ({0}); maximum welfare is NP-hard in this regime, pass the override to run heuristically")]
    NonMonotone(String),

    #[error("brute force refused: {what} is {size}, cap is {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },

    #[error("unknown unit: {0}")]
    UnknownUnit(String),

    #[error("fairness LP is infeasible, so no assignment meets every group bound")]
    LpInfeasible,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("vector lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::LpInfeasible | Error::Infeasible(_))
    }
}
