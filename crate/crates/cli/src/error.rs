use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] topo_adv::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for configuration, parse and file errors, 3 for empty cohorts and
    /// 4 for numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        use topo_adv::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::Parse { .. } | E::Io { .. } => 2,
                E::EmptyCohort(_) => 3,
                E::DegenerateNeighborhood { .. } | E::DegenerateInput(_) | E::DegenerateSimplex | E::GraphMismatch => 4,
            },
        }
    }
}
