use thiserror::Error;

/// Command failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("{0} self-test check(s) failed")]
    ChecksFailed(usize),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Internal(_) => EXIT_INTERNAL,
            CliError::ChecksFailed(_) => EXIT_CHECKS_FAILED,
        }
    }

    pub fn config(e: impl std::fmt::Display) -> CliError {
        CliError::Config(e.to_string())
    }

    pub fn data(e: impl std::fmt::Display) -> CliError {
        CliError::Data(e.to_string())
    }

    pub fn internal(e: impl std::fmt::Display) -> CliError {
        CliError::Internal(e.to_string())
    }

    /// Prefixes the message with the file it concerns.
    pub fn at(self, path: &std::path::Path) -> CliError {
        let p = path.display();
        match self {
            CliError::Config(m) => CliError::Config(format!("{p}: {m}")),
            CliError::Data(m) => CliError::Data(format!("{p}: {m}")),
            CliError::Internal(m) => CliError::Internal(format!("{p}: {m}")),
            other => other,
        }
    }
}

impl From<csisniff_core::Error> for CliError {
    fn from(e: csisniff_core::Error) -> Self {
        use csisniff_core::Error as E;
        match e {
            E::UnsupportedMode(_) | E::UnsupportedRatio { .. } | E::InvalidSeed(_) | E::InvalidChannel(_)
            | E::TapsTooLong { .. } | E::PayloadLength(_) | E::UnknownCodeRate => CliError::Config(e.to_string()),
            E::MalformedHeader(_)
            | E::TruncatedStream(_)
            | E::AntennaLengthMismatch(_)
            | E::Unsorted { .. }
            | E::Version { .. }
            | E::CorruptRecord { .. }
            | E::Io(_)
            | E::Json(_) => CliError::Data(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<csisniff_positioning::Error> for CliError {
    fn from(e: csisniff_positioning::Error) -> Self {
        use csisniff_positioning::Error as E;
        match e {
            E::Config(_) => CliError::Config(e.to_string()),
            E::Core(inner) => inner.into(),
            E::Incomplete(_) | E::ZeroNorm | E::Dimension(_) | E::Empty(_) | E::Checkpoint(_) | E::Io(_) | E::Json(_) => {
                CliError::Data(e.to_string())
            }
            E::NonFinite { .. } => CliError::Internal(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
