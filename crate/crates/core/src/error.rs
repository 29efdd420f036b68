use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("{0}")]
    Domain(String),

    #[error("complete separation: coefficient for `{column}` diverges (|beta| > 15 with likelihood still increasing)")]
    Separation { column: String },

    #[error("rank-deficient design; aliased columns: {}", columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("singular information matrix; dependent columns: {}", columns.join(", "))]
    Singular { columns: Vec<String> },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("no convergence after {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Numerical failures (non-convergence, separation, singularity) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Separation { .. } | Error::Singular { .. } | Error::Divergence(_) | Error::NonConvergence { .. }
        )
    }
}
