use std::fmt;

use firmsurv_core::Error;

/// Everything a command can fail with, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed config or unknown config keys.
    Usage(String),
    Core(Error),
    /// A pipeline stage failed; the partial report has already been written.
    Stage {
        stage: String,
        source: Error,
    },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) | CliError::Stage { source: e, .. } => {
                if e.is_numerical() {
                    3
                } else {
                    2
                }
            }
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Stage { stage, source } => write!(f, "stage `{stage}` failed: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::from(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
