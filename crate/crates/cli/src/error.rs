use thiserror::Error;

use ricciwarp::constructions::ConstructionError;
use ricciwarp::corner::CornerError;
use ricciwarp::{CurveError, SplineError, VerifyError, WarpedError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot parse scenario at `{path}`: {message}")]
    Parse { path: String, message: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{0}")]
    Failed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Precondition(_) => 3,
            CliError::Failed(_) | CliError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Precondition(_) => "precondition",
            CliError::Failed(_) => "failed",
            CliError::Io(_) => "io",
        }
    }
}

impl From<ConstructionError> for CliError {
    fn from(e: ConstructionError) -> Self {
        match e {
            ConstructionError::InvalidParameter { .. } => CliError::Precondition(e.to_string()),
            ConstructionError::Warped(w) => w.into(),
            ConstructionError::Curve(_) | ConstructionError::Spline(_) => CliError::Precondition(e.to_string()),
            ConstructionError::Verify(v) => v.into(),
            ConstructionError::Conditions { .. }
            | ConstructionError::NoBracket { .. }
            | ConstructionError::SearchExhausted { .. } => CliError::Failed(e.to_string()),
        }
    }
}

impl From<WarpedError> for CliError {
    fn from(e: WarpedError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<CurveError> for CliError {
    fn from(e: CurveError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<SplineError> for CliError {
    fn from(e: SplineError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::InvalidGrid(_) => CliError::Precondition(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<CornerError> for CliError {
    fn from(e: CornerError) -> Self {
        match e {
            CornerError::NoWindow { .. } => CliError::Failed(e.to_string()),
            CornerError::Verify(v) => v.into(),
            _ => CliError::Precondition(e.to_string()),
        }
    }
}
