use fragrd_core::families::FamilyError;
use fragrd_core::reaction::ReactionError;
use fragrd_core::solver::SolverError;
use fragrd_core::thresholds::ThresholdError;
use fragrd_core::GeomError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver abort: {0}")]
    Solver(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Assertion(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<GeomError> for CliError {
    fn from(e: GeomError) -> Self {
        CliError::Config(format!("geometry: {e}"))
    }
}

impl From<FamilyError> for CliError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::Geom(g) => g.into(),
            other => CliError::Config(format!("family: {other}")),
        }
    }
}

impl From<ReactionError> for CliError {
    fn from(e: ReactionError) -> Self {
        CliError::Config(format!("reaction: {e}"))
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(m) => CliError::Config(format!("solver: {m}")),
            SolverError::Geom(g) => g.into(),
            SolverError::Reaction(r) => r.into(),
            SolverError::SetNearBoundary { .. } => CliError::Config(format!("solver: {e}")),
            other => CliError::Solver(format!("solver: {other}")),
        }
    }
}

impl From<ThresholdError> for CliError {
    fn from(e: ThresholdError) -> Self {
        match e {
            ThresholdError::Solver(s) => s.into(),
            ThresholdError::Family(f) => f.into(),
            ThresholdError::InvalidRange { .. } | ThresholdError::NotMonotone { .. } => CliError::Config(format!("threshold: {e}")),
            other => CliError::Solver(format!("threshold: {other}")),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("json: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
