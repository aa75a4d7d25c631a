use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input line. `line` is 1-based.
    #[error("{source_name}:{line}: {reason}")]
    Parse {
        source_name: String,
        line: u64,
        reason: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Inputs violate an operation's precondition.
    #[error("{0}")]
    Domain(String),

    /// An optimizer hit its iteration cap. Carries the best iterate found.
    #[error("{what} did not converge after {iterations} iterations (best objective {value:e} at {best:?})")]
    NotConverged {
        what: &'static str,
        best: Vec<f64>,
        value: f64,
        iterations: usize,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
