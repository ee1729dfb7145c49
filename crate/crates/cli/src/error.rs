use heatlab_core::Error;
use thiserror::Error as ThisError;

/// Failure of a run, mapped to a process exit status by [`CliError::exit_code`].
#[derive(Debug, ThisError)]
pub enum CliError {
    /// The config does not match the schema; `pointer` is a dotted path to
    /// the offending key (empty for the document root).
    #[error("schema error at `{pointer}`: {message}")]
    Schema { pointer: String, message: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An assertion-class check failed.
    #[error("check failed: {check}: {detail}")]
    Assertion { check: String, detail: String },

    #[error("i/o: {0}")]
    Io(String),

    #[error(transparent)]
    Core(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Capacity(_) => 3,
            CliError::Assertion { .. } => 1,
            CliError::Io(_) | CliError::Core(_) => 4,
        }
    }

    pub fn assertion(check: impl Into<String>, detail: impl Into<String>) -> Self {
        CliError::Assertion {
            check: check.into(),
            detail: detail.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity(m) => CliError::Capacity(m),
            Error::Violation {
                check,
                location,
                lhs,
                rhs,
            } => CliError::Assertion {
                check,
                detail: format!("at {location}: {lhs:e} > {rhs:e}"),
            },
            other => CliError::Core(other),
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
