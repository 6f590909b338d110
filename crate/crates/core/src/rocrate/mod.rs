//! Workflow-RO-Crate archives: building them from entries, reading them back
//! and checking them against the profile.

mod build;
mod read;
mod validate;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, CONTROLS};
use serde_json::Value;
use thiserror::Error;

pub use build::{build_crate, CrateBuilder, WorkflowCrate};
pub use read::{read_crate, read_crate_with, CrateContents, CrateMetadata};
pub use validate::{validate_crate, ConformanceLevel, ConformanceReport, Finding, FindingCode};

pub const METADATA_FILE: &str = "ro-crate-metadata.json";
pub const ROCRATE_CONTEXT: &str = "https://w3id.org/ro/crate/1.1/context";
pub const ROCRATE_SPEC: &str = "https://w3id.org/ro/crate/1.1";
pub const WORKFLOW_CRATE_PROFILE: &str = "https://w3id.org/workflowhub/workflow-ro-crate/1.0";
/// Programming language entities are identified as `<this>#<class id>`.
pub const LANGUAGE_IRI_BASE: &str = "https://w3id.org/workflowhub/workflow-ro-crate";
pub const SPDX_IRI_PREFIX: &str = "https://spdx.org/licenses/";
/// Cap on the total decompressed size of an archive.
pub const DEFAULT_MAX_UNPACKED_BYTES: u64 = 512 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CrateError {
    #[error("main workflow file `{0}` is not part of the version")]
    MissingMainFile(String),
    #[error("archive has no {METADATA_FILE}")]
    NotACrate,
    #[error("invalid crate: {0}")]
    InvalidCrate(String),
    #[error("archive unpacks to more than {limit} bytes")]
    SizeLimit { limit: u64 },
    #[error("zip error: {0}")]
    Zip(String),
}

impl From<zip::result::ZipError> for CrateError {
    fn from(e: zip::result::ZipError) -> Self {
        CrateError::Zip(e.to_string())
    }
}

/// Characters escaped when a relative file path becomes an entity `@id`.
const PATH_ESCAPES: &AsciiSet = &CONTROLS
    .add(b' ')
    .add(b'"')
    .add(b'#')
    .add(b'%')
    .add(b'<')
    .add(b'>')
    .add(b'?')
    .add(b'[')
    .add(b']')
    .add(b'\\')
    .add(b'^')
    .add(b'`')
    .add(b'{')
    .add(b'|')
    .add(b'}');

pub(crate) fn path_to_id(path: &str) -> String {
    utf8_percent_encode(path, PATH_ESCAPES).to_string()
}

pub(crate) fn id_to_path(id: &str) -> String {
    let id = id.strip_prefix("./").unwrap_or(id);
    percent_decode_str(id).decode_utf8_lossy().into_owned()
}

/// `{"@id": ...}` reference.
pub(crate) fn id_ref(id: impl Into<String>) -> Value {
    serde_json::json!({ "@id": id.into() })
}

/// Values of a property that may be a single item or a list.
pub(crate) fn as_list(v: Option<&Value>) -> Vec<&Value> {
    match v {
        Some(Value::Array(items)) => items.iter().collect(),
        Some(Value::Null) | None => Vec::new(),
        Some(other) => vec![other],
    }
}

/// `@id` of a reference, or the string itself.
pub(crate) fn ref_id(v: &Value) -> Option<&str> {
    match v {
        Value::String(s) => Some(s),
        Value::Object(o) => o.get("@id").and_then(Value::as_str),
        _ => None,
    }
}

pub(crate) fn types_of(entity: &Value) -> Vec<&str> {
    as_list(entity.get("@type"))
        .into_iter()
        .filter_map(Value::as_str)
        .collect()
}

pub(crate) fn has_type(entity: &Value, t: &str) -> bool {
    types_of(entity).contains(&t)
}

/// Pretty JSON with two-space indentation. Object keys are sorted because
/// `serde_json` maps are ordered by key.
pub(crate) fn to_canonical_json(v: &Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("JSON values always serialise");
    out.push(b'\n');
    out
}
