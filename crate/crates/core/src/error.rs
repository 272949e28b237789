use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Signal length is not a power of two (or is too short).
    #[error("signal length {0} is not a power of two >= 2")]
    Length(usize),

    #[error("primary level J0 = {j0} must be below J = {levels}")]
    Level { j0: usize, levels: usize },

    /// Pyramid shape does not match its declared length / levels.
    #[error("inconsistent coefficient pyramid: {0}")]
    Structure(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Missing or inconsistent configuration (for example a level without a rule).
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
