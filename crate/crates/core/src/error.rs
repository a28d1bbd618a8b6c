use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input. `line` is 1-based; `column` is the 1-based
    /// whitespace-delimited field index when the problem is a single field.
    #[error("{what}: line {line}{}: {message}", column.map(|c| format!(", field {c}")).unwrap_or_default())]
    Parse {
        what: &'static str,
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigendecomposition of a {size}x{size} matrix did not converge within {iterations} iterations")]
    NoConvergence { size: usize, iterations: usize },

    #[error("undefined DER: {0}")]
    UndefinedDenominator(String),

    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),

    #[error("recording {recording} failed at alpha={alpha:.2}: {source}")]
    Sweep {
        recording: String,
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(what: &'static str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            what,
            line,
            column: None,
            message: message.into(),
        }
    }

    pub(crate) fn parse_at(
        what: &'static str,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Parse {
            what,
            line,
            column: Some(column),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the numerical core rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NoConvergence { .. } => true,
            Error::Sweep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
