use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix or vector dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Malformed input file content. `line` is 1-based.
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    /// A character span could not be mapped onto token boundaries.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// A run-configuration key is missing, unknown, or out of range.
    #[error("config error: {0}")]
    Config(String),

    /// A checkpoint file failed to decode or disagrees with the model.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// The finite-difference oracle hit a non-finite function value.
    #[error("finite-difference probe returned a non-finite value at coordinate {coordinate}")]
    NonFiniteProbe { coordinate: usize },

    /// Training stopped because a loss or gradient went non-finite.
    #[error("training aborted: {0}")]
    TrainingAbort(String),

    /// An internal invariant was violated; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    /// True for errors caused by bad user input (flags, config, file
    /// content) as opposed to failures at run time.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Shape(_)
                | Error::Format { .. }
                | Error::Alignment(_)
                | Error::Config(_)
                | Error::Checkpoint(_)
        )
    }
}
