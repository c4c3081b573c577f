use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("cannot parse {format}: {message}")]
    Parse { format: &'static str, message: String },

    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },

    #[error("missing artifact {}", path.display())]
    MissingArtifact { path: PathBuf },

    #[error("the manifest lists no artifacts")]
    EmptyArtifacts,

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] wgmc::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Machine-readable form written to stderr on failure.
#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub status: &'static str,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Schema { .. } => "schema",
            CliError::Parse { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::MissingArtifact { .. } => "missing-artifact",
            CliError::EmptyArtifacts => "empty-artifacts",
            CliError::Invalid(_) => "invalid",
            CliError::Core(wgmc::Error::Capacity { .. }) => "capacity",
            CliError::Core(_) => "computation",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::Parse { .. } => 2,
            _ => 1,
        }
    }

    pub fn report(&self) -> ErrorReport {
        let path = match self {
            CliError::Schema { path, .. } => Some(path.clone()),
            CliError::Io { path, .. } | CliError::MissingArtifact { path } => Some(path.display().to_string()),
            _ => None,
        };
        ErrorReport {
            status: "error",
            kind: self.kind(),
            path,
            message: self.to_string(),
        }
    }
}
