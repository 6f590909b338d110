//! Controlled vocabularies bundled with the registry: SPDX licenses and EDAM
//! concept identifiers.

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

const SPDX_IDS: &str = include_str!("../../data/spdx_ids.txt");
const EDAM_IDS: &str = include_str!("../../data/edam_ids.txt");

pub const EDAM_IRI_PREFIX: &str = "http://edamontology.org/";

/// Non-empty, non-comment lines of a bundled data file.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn spdx_set() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| data_lines(SPDX_IDS).map(str::to_ascii_lowercase).collect())
}

pub fn is_known_spdx(id: &str) -> bool {
    spdx_set().contains(&id.trim().to_ascii_lowercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdamKind {
    Topic,
    Operation,
    Format,
}

impl EdamKind {
    pub fn prefix(self) -> &'static str {
        match self {
            EdamKind::Topic => "topic_",
            EdamKind::Operation => "operation_",
            EdamKind::Format => "format_",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdamCheck {
    Valid,
    /// Right shape but absent from the bundled id list.
    Unknown,
    Malformed,
}

fn edam_shape() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(topic|operation|format|data)_\d{4}$").unwrap())
}

fn edam_set() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| data_lines(EDAM_IDS).map(str::to_string).collect())
}

/// Normalises an EDAM IRI, CURIE (`edam:topic_0196`) or bare id to the bare id.
pub fn edam_bare_id(raw: &str) -> Option<String> {
    let raw = raw.trim();
    let bare = raw
        .strip_prefix(EDAM_IRI_PREFIX)
        .or_else(|| raw.strip_prefix("https://edamontology.org/"))
        .or_else(|| raw.strip_prefix("edam:"))
        .unwrap_or(raw);
    edam_shape().is_match(bare).then(|| bare.to_string())
}

pub fn edam_iri(id: &str) -> String {
    format!("{EDAM_IRI_PREFIX}{id}")
}

pub fn check_edam(id: &str, kind: EdamKind) -> EdamCheck {
    if !id.starts_with(kind.prefix()) || !edam_shape().is_match(id) {
        EdamCheck::Malformed
    } else if edam_set().contains(id) {
        EdamCheck::Valid
    } else {
        EdamCheck::Unknown
    }
}

pub fn edam_kind_of(id: &str) -> Option<EdamKind> {
    [EdamKind::Topic, EdamKind::Operation, EdamKind::Format]
        .into_iter()
        .find(|k| id.starts_with(k.prefix()))
}

/// All bundled ids of one kind, sorted.
pub fn bundled_edam_ids(kind: EdamKind) -> Vec<&'static str> {
    let mut ids: Vec<&'static str> = edam_set()
        .iter()
        .map(String::as_str)
        .filter(|id| id.starts_with(kind.prefix()))
        .collect();
    ids.sort_unstable();
    ids
}
