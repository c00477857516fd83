use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("artifact integrity error: {0}")]
    Integrity(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] advscape_core::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    /// 2 for configuration problems, 3 for artifact integrity, 4 for
    /// numeric failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use advscape_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Integrity(_) => 3,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::Shape(_) | E::LabelOutOfRange { .. } => 2,
                E::Format { .. } => 3,
                E::Numeric(_) => 4,
                E::Io(_) => 1,
            },
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |source| CliError::Io { path, source }
}

macro_rules! config_err {
    ($($arg:tt)*) => {
        $crate::error::CliError::Config(format!($($arg)*))
    };
}

pub(crate) use config_err;
