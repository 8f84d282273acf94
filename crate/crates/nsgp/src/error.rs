use std::path::PathBuf;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<nsgp_core::Error> for CliError {
    fn from(e: nsgp_core::Error) -> Self {
        use nsgp_core::Error as E;
        match e {
            E::Config(_) | E::InvalidParameter(_) | E::Unfittable => {
                CliError::Config(e.to_string())
            }
            E::NotPositiveDefinite { .. } => CliError::Numerical(e.to_string()),
            E::InvalidArgument(_)
            | E::DimensionMismatch(_)
            | E::RankDeficient(_)
            | E::NeighborhoodTooSmall { .. } => CliError::Data(e.to_string()),
        }
    }
}
