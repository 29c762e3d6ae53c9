use std::path::PathBuf;

use thiserror::Error;

use crate::envmodel::Cell;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid environment: cell {index} ({x}, {y}): {reason}")]
    InvalidCell {
        index: usize,
        x: usize,
        y: usize,
        reason: String,
    },
    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),
    #[error("invalid trajectory: state {index}: {reason}")]
    InvalidTrajectory { index: usize, reason: String },
    #[error("invalid demonstrations: {0}")]
    InvalidDemonstrations(String),
    #[error("cell ({}, {}) is outside the {width}x{height} grid", .cell.x, .cell.y)]
    OutOfBounds { cell: Cell, width: usize, height: usize },
    #[error("weight vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite weights: {0:?}")]
    NonFiniteWeights(Vec<f64>),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("weight vector {0:?} is not a member of the reward space")]
    NotInSpace(Vec<f64>),
    #[error("degenerate posterior: every point product is zero")]
    DegeneratePosterior,
    #[error("gradient ascent diverged at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("goal ({}, {}) is unreachable from ({}, {})", .goal.x, .goal.y, .start.x, .start.y)]
    Unreachable { start: Cell, goal: Cell },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (configuration, files, schema)
    /// rather than by a failure of the computation itself.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse(_)
                | Error::InvalidCell { .. }
                | Error::InvalidEnvironment(_)
                | Error::InvalidTrajectory { .. }
                | Error::InvalidDemonstrations(_)
                | Error::InvalidParameter(_)
                | Error::Config(_)
        )
    }
}
