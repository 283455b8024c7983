use std::path::PathBuf;

use gaussflow_core::Error as CoreError;

/// Process exit codes, grouped by the invariant family that failed.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const CONVEXITY: i32 = 2;
    pub const INEQUALITY: i32 = 3;
    pub const STEP_FAILURE: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {what}: {source}")]
    Json { what: String, source: serde_json::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("malformed trace {}: {reason}", path.display())]
    Trace { path: PathBuf, reason: String },
    #[error("failing checks: {0}")]
    Inequality(String),
    #[error("{0}")]
    Usage(String),
}

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Core(CoreError::ConvexityViolation { .. }) => exit::CONVEXITY,
            LabError::Core(CoreError::StepFailure { .. }) => exit::STEP_FAILURE,
            LabError::Core(_) | LabError::Usage(_) => exit::USAGE,
            LabError::Inequality(_) => exit::INEQUALITY,
            LabError::Io { .. } | LabError::Json { .. } | LabError::Csv { .. } | LabError::Trace { .. } => exit::IO,
        }
    }
}

pub type LabResult<T> = Result<T, LabError>;
