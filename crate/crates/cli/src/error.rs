use std::path::PathBuf;

use crate::config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input, reported at `line:col` or `override N`.
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("{0}")]
    Usage(String),
    /// Configuration or input violates an invariant; `key` is `section.key`.
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("resource limit: {0}")]
    Resource(String),
    #[error("analysis failed: {0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } => 1,
            Self::Parse { .. } | Self::Usage(_) => 2,
            Self::Invalid { .. } => 3,
            Self::Resource(_) => 4,
            Self::Analysis(_) => 5,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Translates a simulator error, naming the config key it most likely
    /// refers to.
    pub fn from_core(err: ionsim_core::Error, config: Option<&ExperimentConfig>) -> Self {
        use ionsim_core::Error as E;
        match err {
            E::Domain { param, reason } => {
                let key = config
                    .and_then(|c| c.qualify(param))
                    .unwrap_or_else(|| param.to_string());
                Self::Invalid { key, reason }
            }
            E::ResourceGuard(msg) => Self::Resource(msg),
            E::Fit(msg) | E::Undefined(msg) => Self::Analysis(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
