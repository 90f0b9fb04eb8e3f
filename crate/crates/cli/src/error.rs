use std::path::PathBuf;

use phonon_bjj::Error as CoreError;
use thiserror::Error;

/// Failures of the command-line front end, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("unknown preset `{name}`; valid names: {}", valid.join(", "))]
    UnknownPreset { name: String, valid: Vec<String> },
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(CoreError),
    #[error("analysis inconclusive: {0}")]
    Inconclusive(String),
    #[error("{0}")]
    Model(CoreError),
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 2 for configuration problems, 3 for numerical failures, 4 when an
    /// analysis could not reach a verdict, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::UnknownPreset { .. } => 2,
            CliError::Read { .. } | CliError::Write { .. } => 1,
            CliError::Numerical(_) => 3,
            CliError::Inconclusive(_) => 4,
            CliError::Model(e) => core_exit_code(e),
        }
    }
}

/// Exit code for a core error surfaced directly.
pub fn core_exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Integration(_) => 3,
        CoreError::TooFewCrossings { .. }
        | CoreError::NoTransitionInRange { .. }
        | CoreError::Undefined(_) => 4,
        _ => 2,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Integration(_) => CliError::Numerical(e),
            _ => CliError::Model(e),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
