use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value while evaluating {0}")]
    NumericOverflow(&'static str),

    #[error("degenerate stream: no coordinate carries any information (all diagonal Hessian entries are zero)")]
    DegenerateStream,

    #[error("active-block Hessian is singular or indefinite over indices {indices:?}")]
    RefitDegenerate { indices: Vec<usize> },

    #[error("batch order violation: expected batch {expected}, got {found}")]
    BatchOrder { expected: usize, found: usize },

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unsupported checkpoint format version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),

    #[error("R² is undefined: response has zero variance")]
    UndefinedRSquared,

    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit status for the command-line front end: 2 for usage,
    /// configuration and input problems, 1 for runtime or numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. }
            | Error::InvalidInput(_)
            | Error::BatchOrder { .. }
            | Error::Parse { .. }
            | Error::UnsupportedVersion(_)
            | Error::Corrupt(_)
            | Error::File { .. } => 2,
            Error::NumericOverflow(_)
            | Error::DegenerateStream
            | Error::RefitDegenerate { .. }
            | Error::UndefinedRSquared
            | Error::Io(_) => 1,
        }
    }
}
