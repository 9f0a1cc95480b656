use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("numerical error at iteration {iteration}: {message}")]
    NumericalDivergence {
        message: String,
        iteration: usize,
        /// Last valid iterate before the failure.
        last_beta: Vec<f64>,
    },

    #[error("empty selection: every penalty in the schedule produced the zero vector; retry with a smaller lambda0")]
    EmptySelection,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-parsable code emitted by the CLI on failure.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "E_PARAM",
            Error::InvalidInput(_) => "E_INPUT",
            Error::Numerical(_) | Error::NumericalDivergence { .. } => "E_NUMERIC",
            Error::EmptySelection => "E_EMPTY_SELECTION",
            Error::Parse { .. } => "E_PARSE",
            Error::Io { .. } => "E_IO",
        }
    }
}
