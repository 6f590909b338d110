//! Entry completeness checks.
//!
//! Only a title and at least one owning team are mandatory; every other gap
//! is reported as a warning so the submitter can be prompted to fill it.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::classes::ClassRegistry;
use super::entry::{Maturity, WorkflowEntry};
use super::vocab::{check_edam, is_known_spdx, EdamCheck, EdamKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum ValidationError {
    MissingTitle,
    MissingTeams,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "code", content = "detail", rename_all = "snake_case")]
pub enum ValidationWarning {
    MissingLicense,
    UnknownLicense(String),
    MissingCreators,
    MissingDescription,
    MissingEdamTopics,
    MissingEdamOperations,
    UnknownEdamId(String),
    MalformedEdamId(String),
    MissingTools,
    UnknownClass(String),
    UnknownMaturity(String),
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationError::MissingTitle => f.write_str("a title is required"),
            ValidationError::MissingTeams => f.write_str("at least one owning team is required"),
        }
    }
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationWarning::*;
        match self {
            MissingLicense => f.write_str("no license given"),
            UnknownLicense(l) => write!(f, "license `{l}` is not a known SPDX identifier"),
            MissingCreators => f.write_str("no creators listed"),
            MissingDescription => f.write_str("no description"),
            MissingEdamTopics => f.write_str("no EDAM topics"),
            MissingEdamOperations => f.write_str("no EDAM operations"),
            UnknownEdamId(id) => write!(f, "EDAM id `{id}` is not in the bundled ontology list"),
            MalformedEdamId(id) => write!(f, "`{id}` is not a valid EDAM id for this field"),
            MissingTools => f.write_str("no tools annotated"),
            UnknownClass(c) => write!(f, "workflow class `{c}` is not registered"),
            UnknownMaturity(m) => write!(f, "maturity `{m}` is not a configured level"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub errors: Vec<ValidationError>,
    pub warnings: Vec<ValidationWarning>,
}

impl ValidationReport {
    pub fn is_persistable(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Vocabulary the checks run against.
#[derive(Debug, Clone)]
pub struct ValidationContext {
    pub classes: ClassRegistry,
    pub maturity_levels: Vec<String>,
}

impl Default for ValidationContext {
    fn default() -> Self {
        ValidationContext {
            classes: ClassRegistry::seeded(),
            maturity_levels: vec![
                Maturity::WORK_IN_PROGRESS.to_string(),
                Maturity::STABLE.to_string(),
            ],
        }
    }
}

pub fn validate_entry(entry: &WorkflowEntry, ctx: &ValidationContext) -> ValidationReport {
    let mut report = ValidationReport::default();

    if entry.title.trim().is_empty() {
        report.errors.push(ValidationError::MissingTitle);
    }
    if entry.team_ids.is_empty() {
        report.errors.push(ValidationError::MissingTeams);
    }

    let w = &mut report.warnings;
    match entry.license.as_deref().map(str::trim) {
        None | Some("") => w.push(ValidationWarning::MissingLicense),
        Some(l) if !is_known_spdx(l) => w.push(ValidationWarning::UnknownLicense(l.to_string())),
        Some(_) => {}
    }
    if entry.creators.is_empty() {
        w.push(ValidationWarning::MissingCreators);
    }
    if entry.description.trim().is_empty() {
        w.push(ValidationWarning::MissingDescription);
    }
    if entry.edam_topics.is_empty() {
        w.push(ValidationWarning::MissingEdamTopics);
    }
    if entry.edam_operations.is_empty() {
        w.push(ValidationWarning::MissingEdamOperations);
    }
    let edam = entry
        .edam_topics
        .iter()
        .map(|id| (id, EdamKind::Topic))
        .chain(
            entry
                .edam_operations
                .iter()
                .map(|id| (id, EdamKind::Operation)),
        );
    for (id, kind) in edam {
        match check_edam(id, kind) {
            EdamCheck::Valid => {}
            EdamCheck::Unknown => w.push(ValidationWarning::UnknownEdamId(id.clone())),
            EdamCheck::Malformed => w.push(ValidationWarning::MalformedEdamId(id.clone())),
        }
    }
    if entry.tool_refs.is_empty() {
        w.push(ValidationWarning::MissingTools);
    }
    if !ctx.classes.contains(&entry.workflow_class) {
        w.push(ValidationWarning::UnknownClass(
            entry.workflow_class.to_string(),
        ));
    }
    if !ctx
        .maturity_levels
        .iter()
        .any(|m| m == entry.maturity.as_str())
    {
        w.push(ValidationWarning::UnknownMaturity(
            entry.maturity.to_string(),
        ));
    }

    report
}
