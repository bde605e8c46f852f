use thiserror::Error;

use crate::conic::SolveStatus;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("Lebesgue moments unavailable for a generic semi-algebraic set")]
    MomentsUnavailable,

    #[error("relaxation order {order} is below the minimum order {minimum}")]
    OrderTooSmall { order: usize, minimum: usize },

    #[error("degree {degree} exceeds the truncation degree {max}")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("degenerate occupation measure: every singular value of the moment matrix is below the cutoff")]
    DegenerateMeasure,

    #[error("solver returned status {status:?}: {message}")]
    Solver { status: SolveStatus, message: String },

    #[error("initial state lies outside the state constraint set")]
    OutsideX,

    #[error("Riccati iteration failed: {0}")]
    Riccati(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::InvalidSet(_) => "invalid_set",
            Error::MomentsUnavailable => "moments_unavailable",
            Error::OrderTooSmall { .. } => "order_too_small",
            Error::DegreeOverflow { .. } => "degree_overflow",
            Error::DegenerateMeasure => "degenerate_measure",
            Error::Solver { .. } => "solver",
            Error::OutsideX => "outside_x",
            Error::Riccati(_) => "riccati",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
