use std::path::PathBuf;

use gpcs::GpcsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    InvalidArgs(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{0}")]
    Parse(String),

    #[error("{0}")]
    Numerical(String),

    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::InvalidArgs(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Parse(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::NotConverged(_) => 6,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }
}

impl From<GpcsError> for CliError {
    fn from(e: GpcsError) -> Self {
        use GpcsError::*;
        let msg = e.to_string();
        match e {
            InvalidSample(_)
            | InsufficientData { .. }
            | MissingLabels
            | DimensionMismatch(_)
            | UnknownSetting(_)
            | InvalidSpec(_)
            | InvalidArgument(_) => CliError::InvalidArgs(msg),
            NonFinite { .. } => CliError::Parse(msg),
            DegenerateLine
            | DegenerateCluster { .. }
            | MissingMoments { .. }
            | SingularCovariance { .. }
            | ClusterTooSmall { .. }
            | NoFeasibleK { .. }
            | TooManyFailures { .. } => CliError::Numerical(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
