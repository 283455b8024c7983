use core::fmt;

/// Every failure the numerical core can report.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    UnsupportedDimension(usize),
    InvalidResolution { dimension: usize, resolution: usize },
    LengthMismatch { expected: usize, found: usize },
    GridMismatch,
    InvalidParameter(&'static str),
    /// The matrix `∇²s + s·Id` failed to be positive definite at `node`.
    ConvexityViolation { node: usize, value: f64 },
    /// A point search could not keep its iterate interior while improving the objective.
    LineSearchFailure { iterations: usize },
    OptimizationFailure(&'static str),
    NotNormalized { volume: f64, target: f64 },
    StepFailure { time: f64, halvings: u32 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedDimension(n) => write!(f, "unsupported dimension {n}, expected 2 or 3"),
            Error::InvalidResolution { dimension, resolution } => write!(
                f,
                "invalid resolution {resolution} for dimension {dimension}: must be even and at least 8"
            ),
            Error::LengthMismatch { expected, found } => {
                write!(f, "field has {found} samples, grid has {expected} nodes")
            }
            Error::GridMismatch => write!(f, "fields live on different grids"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            Error::ConvexityViolation { node, value } => write!(
                f,
                "convexity violation at node {node}: smallest curvature radius {value:e}"
            ),
            Error::LineSearchFailure { iterations } => write!(
                f,
                "line search failed to stay interior after {iterations} iterations"
            ),
            Error::OptimizationFailure(what) => write!(f, "optimization failure: {what}"),
            Error::NotNormalized { volume, target } => {
                write!(f, "body volume {volume} differs from the unit-ball volume {target}")
            }
            Error::StepFailure { time, halvings } => write!(
                f,
                "flow step failed at t = {time} after {halvings} step halvings"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
