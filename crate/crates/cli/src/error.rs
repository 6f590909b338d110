use std::path::PathBuf;

use flowhub_core::config::ConfigError;
use flowhub_core::git::GitError;
use flowhub_core::RegistryError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0} not found")]
    Missing(String),
    #[error("the crate is not valid")]
    InvalidCrate,
    #[error("server failed: {0}")]
    Serve(std::io::Error),
}

impl CliError {
    /// Process exit status: 2 validation, 3 access, 4 not found,
    /// 5 transport.
    pub fn exit_code(&self) -> i32 {
        use RegistryError::*;
        match self {
            CliError::Registry(e) => match e {
                NotFound { .. } => 4,
                AuthenticationRequired
                | InvalidCredentials
                | AccessDenied { .. }
                | Forbidden(_) => 3,
                Git(GitError::RefNotFound(_)) => 4,
                Git(GitError::FetchError { .. }) | MintFailed(_) | Storage(_) => 5,
                _ => 2,
            },
            CliError::Config(_) | CliError::Usage(_) | CliError::InvalidCrate => 2,
            CliError::Read { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 4,
            CliError::Missing(_) => 4,
            CliError::Read { .. } | CliError::Write { .. } | CliError::Serve(_) => 5,
        }
    }

    /// The error code the HTTP API would report for the same failure.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Registry(e) => e.code(),
            CliError::Config(_) => "invalid_config",
            CliError::Usage(_) => "invalid_input",
            CliError::Missing(_) => "not_found",
            CliError::InvalidCrate => "invalid_crate",
            CliError::Read { .. } | CliError::Write { .. } => "io_error",
            CliError::Serve(_) => "transport",
        }
    }
}
