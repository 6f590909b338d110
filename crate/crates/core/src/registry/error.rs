use thiserror::Error;

use crate::git::GitError;
use crate::model::{AccessReason, ClassError, EntryId, Right, ValidationReport};
use crate::parsers::ParseError;
use crate::rocrate::CrateError;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("{kind} {id} not found")]
    NotFound { kind: &'static str, id: String },
    #[error("authentication required")]
    AuthenticationRequired,
    #[error("invalid credentials")]
    InvalidCredentials,
    #[error("{right} access denied ({reason:?})")]
    AccessDenied { right: Right, reason: AccessReason },
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("entry failed validation")]
    Validation(ValidationReport),
    #[error("attribution {from} -> {to} would create a cycle")]
    AttributionCycle { from: EntryId, to: EntryId },
    #[error("version {version} of entry {entry} is frozen")]
    FrozenVersion { entry: EntryId, version: u32 },
    #[error("DOIs can only be minted for public entries")]
    VisibilityRequired,
    #[error("DOI minting failed: {0}")]
    MintFailed(String),
    #[error("item is already in the collection")]
    DuplicateItem,
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("bad query: {0}")]
    BadQuery(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Crate(#[from] CrateError),
    #[error(transparent)]
    Git(#[from] GitError),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error("storage error: {0}")]
    Storage(String),
}

impl RegistryError {
    pub(crate) fn not_found(kind: &'static str, id: impl ToString) -> Self {
        RegistryError::NotFound {
            kind,
            id: id.to_string(),
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::NotFound { .. } => "not_found",
            RegistryError::AuthenticationRequired => "authentication_required",
            RegistryError::InvalidCredentials => "invalid_credentials",
            RegistryError::AccessDenied { .. } => "access_denied",
            RegistryError::Forbidden(_) => "forbidden",
            RegistryError::Validation(_) => "validation_failed",
            RegistryError::AttributionCycle { .. } => "attribution_cycle",
            RegistryError::FrozenVersion { .. } => "frozen_version",
            RegistryError::VisibilityRequired => "visibility_required",
            RegistryError::MintFailed(_) => "mint_failed",
            RegistryError::DuplicateItem => "duplicate_item",
            RegistryError::Conflict(_) => "conflict",
            RegistryError::BadQuery(_) => "bad_query",
            RegistryError::InvalidInput(_) => "invalid_input",
            RegistryError::Parse(_) => "parse_error",
            RegistryError::Crate(CrateError::NotACrate) => "not_a_crate",
            RegistryError::Crate(CrateError::SizeLimit { .. }) => "size_limit",
            RegistryError::Crate(_) => "invalid_crate",
            RegistryError::Git(GitError::RefNotFound(_)) => "ref_not_found",
            RegistryError::Git(GitError::SizeLimit(_)) => "size_limit",
            RegistryError::Git(GitError::FetchError { .. }) => "fetch_error",
            RegistryError::Class(_) => "invalid_class",
            RegistryError::Storage(_) => "storage_error",
        }
    }
}

impl From<std::io::Error> for RegistryError {
    fn from(e: std::io::Error) -> Self {
        RegistryError::Storage(e.to_string())
    }
}
