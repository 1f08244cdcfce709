use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("singular matrix in {0}")]
    Singular(&'static str),

    #[error("assignment problem is infeasible")]
    Infeasible,

    #[error("trajectory {0} has no birth or undetected-object support")]
    UnsupportedTrajectory(usize),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("hypothesis count {count} exceeds cap {cap}; use a smaller instance")]
    SizeCap { count: usize, cap: usize },

    #[error("run {run}: {source}")]
    Run {
        run: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) | Error::Json(_) => 2,
            Error::SizeCap { .. } => 4,
            Error::Run { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}
