use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] gevrey_core::Error),
}

impl CliError {
    /// 2 for usage and configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        use gevrey_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                E::OrderTooLarge { .. }
                | E::DimensionMismatch { .. }
                | E::UnsupportedDimension(_)
                | E::InvalidParameter(_)
                | E::JetOrderOverflow { .. }
                | E::StepTooLarge { .. }
                | E::MissingEntry(_)
                | E::Unsupported(_)
                | E::Parse(_)
                | E::UnboundedField => 2,
                _ => 1,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
