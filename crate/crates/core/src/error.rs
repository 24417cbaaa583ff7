use thiserror::Error;

use crate::thickened::ThickenedPath;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: dimension mismatches, non-unit directions, bad labels.
    #[error("invalid input: {0}")]
    Input(String),

    /// The input is well formed but violates a mathematical precondition of the operation.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Two consecutive chain vertices coincide, where the action is not differentiable.
    #[error("non-smooth point: vertices {0} and {1} coincide")]
    NonSmoothPoint(usize, usize),

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    MaxIterations { iterations: usize, grad_norm: f64 },

    /// The simulated path reached a point where two thickened walls meet.
    #[error("corner collision at t = {time} between subspaces {first} and {second}")]
    CornerCollision {
        time: f64,
        first: usize,
        second: usize,
        partial: Box<ThickenedPath>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
