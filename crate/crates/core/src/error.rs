use thiserror::Error;

/// Errors produced by the library.
///
/// Each variant maps onto one class of the command-line exit-code contract
/// (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied inconsistent or invalid data.
    #[error("input error: {0}")]
    Input(String),

    /// Training diverged or produced non-finite values.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("pose ({x}, {y}) lies outside the workspace")]
    OutOfWorkspace { x: f64, y: f64 },

    /// A file could not be parsed, or failed its integrity checks.
    #[error("format error: {0}")]
    Format(String),

    /// Experiment configuration is inconsistent with the data it references.
    #[error("config error: {0}")]
    Config(String),

    /// Trial class sampling kept drawing classes without queries or entries.
    #[error("trial {trial}: class resampling exhausted after {attempts} attempts")]
    ResamplingExhausted { trial: usize, attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    /// Process exit code: 2 for input/config/format problems, 3 for numerical
    /// failure, 4 for protocol failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical(_) => 3,
            Error::ResamplingExhausted { .. } => 4,
            Error::Input(_)
            | Error::OutOfWorkspace { .. }
            | Error::Format(_)
            | Error::Config(_)
            | Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
