use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate neighborhood at point {index}: covariance rank < 2")]
    DegenerateNeighborhood { index: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("degenerate simplex: vertices are affinely dependent")]
    DegenerateSimplex,

    #[error("neighbor graph was built from a different cloud")]
    GraphMismatch,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty cohort: {0}")]
    EmptyCohort(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
