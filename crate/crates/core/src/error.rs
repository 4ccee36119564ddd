use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report.
///
/// Variants are grouped so the CLI can map them onto exit codes:
/// configuration problems, data problems and training problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("cannot stratify: label `{label}` has {count} members but {k} folds were requested")]
    Stratification { label: String, count: usize, k: usize },

    #[error("degenerate marginals: chance agreement is 1 but observed agreement is {observed}")]
    DegenerateMarginals { observed: f64 },

    #[error("degenerate training data: {0}")]
    DegenerateTraining(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("model file error: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse category used for exit codes and machine-readable diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Training,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Argument(_) => ErrorKind::Config,
            Error::Stratification { .. }
            | Error::DegenerateTraining(_)
            | Error::Training(_) => ErrorKind::Training,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::DegenerateMarginals { .. }
            | Error::Model(_)
            | Error::Io(_)
            | Error::Json(_) => ErrorKind::Data,
        }
    }
}
