use std::path::PathBuf;
use std::process::ExitCode;

use halluprobe_core::Error as CoreError;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read config {path}: {msg}")]
    ConfigFile { path: PathBuf, msg: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: CoreError,
    },

    #[error("{stage}: backend failed on every request ({detail})")]
    BackendDown { stage: String, detail: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn stage(stage: impl Into<String>) -> impl FnOnce(CoreError) -> CliError {
        let stage = stage.into();
        move |source| CliError::Stage { stage, source }
    }

    fn core(&self) -> Option<&CoreError> {
        match self {
            CliError::Stage { source, .. } | CliError::Core(source) => Some(source),
            _ => None,
        }
    }

    /// 2 invariant violation, 3 backend failure, 4 configuration or input error, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::ConfigFile { .. } => 4,
            CliError::BackendDown { .. } => 3,
            CliError::Write { .. } => 1,
            _ => match self.core() {
                Some(CoreError::Invariant(_)) => 2,
                Some(CoreError::Backend(_)) => 3,
                Some(
                    CoreError::InvalidArgument(_) | CoreError::Parse { .. } | CoreError::Io { .. } | CoreError::Json(_),
                ) => 4,
                _ => 1,
            },
        }
    }
}

impl From<&CliError> for ExitCode {
    fn from(e: &CliError) -> Self {
        ExitCode::from(e.exit_code())
    }
}
