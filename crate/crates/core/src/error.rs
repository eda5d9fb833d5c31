use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("invalid environment: {0}")]
    InvalidEnvironment(String),

    #[error("step too large: proposal could not be brought back inside the domain after {0} reflection passes")]
    StepTooLarge(usize),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("degenerate domain: rejection sampling failed after {0} attempts")]
    DegenerateDomain(usize),

    #[error("no dense trace was recorded for this path")]
    MissingTrace,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("ingest error: {message} (rows {rows:?})")]
    Ingest { message: String, rows: Vec<usize> },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
