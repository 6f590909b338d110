use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::read::{unpack, Graph};
use super::{
    as_list, has_type, id_to_path, ref_id, CrateError, DEFAULT_MAX_UNPACKED_BYTES,
    WORKFLOW_CRATE_PROFILE,
};

/// Files a crate may carry without listing them in its metadata.
const UNLISTED_OK: [&str; 1] = ["ro-crate-preview.html"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformanceLevel {
    Valid,
    Warnings,
    Invalid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingCode {
    UnreadableArchive,
    SizeLimit,
    MetadataMissing,
    MetadataSyntax,
    DescriptorMissing,
    RootMissing,
    MainEntityMissing,
    MainEntityType,
    ProfileMissing,
    ProgrammingLanguageMissing,
    LicenseMissing,
    FileMissing,
    OrphanFile,
}

impl FindingCode {
    pub fn is_error(self) -> bool {
        !matches!(
            self,
            FindingCode::ProfileMissing
                | FindingCode::ProgrammingLanguageMissing
                | FindingCode::LicenseMissing
                | FindingCode::OrphanFile
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConformanceReport {
    pub level: ConformanceLevel,
    pub findings: Vec<Finding>,
}

impl ConformanceReport {
    fn from_findings(findings: Vec<Finding>) -> Self {
        let level = if findings.iter().any(|f| f.code.is_error()) {
            ConformanceLevel::Invalid
        } else if findings.is_empty() {
            ConformanceLevel::Valid
        } else {
            ConformanceLevel::Warnings
        };
        ConformanceReport { level, findings }
    }

    pub fn has(&self, code: FindingCode) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

/// Checks an archive against the Workflow-RO-Crate profile. Never fails;
/// every problem is reported as a finding.
pub fn validate_crate(archive: &[u8]) -> ConformanceReport {
    let mut findings = Vec::new();
    let mut push = |code: FindingCode, message: String| findings.push(Finding { code, message });

    let unpacked = match unpack(archive, DEFAULT_MAX_UNPACKED_BYTES) {
        Ok(u) => u,
        Err(CrateError::SizeLimit { limit }) => {
            push(
                FindingCode::SizeLimit,
                format!("archive unpacks to more than {limit} bytes"),
            );
            return ConformanceReport::from_findings(findings);
        }
        Err(e) => {
            push(FindingCode::UnreadableArchive, e.to_string());
            return ConformanceReport::from_findings(findings);
        }
    };
    let Some(metadata) = unpacked.metadata else {
        push(
            FindingCode::MetadataMissing,
            "no ro-crate-metadata.json".into(),
        );
        return ConformanceReport::from_findings(findings);
    };
    let doc: Value = match serde_json::from_slice(&metadata) {
        Ok(d) => d,
        Err(e) => {
            push(FindingCode::MetadataSyntax, e.to_string());
            return ConformanceReport::from_findings(findings);
        }
    };
    let graph = Graph::new(&doc);
    let files = &unpacked.files;

    match graph.descriptor {
        None => push(
            FindingCode::DescriptorMissing,
            "no metadata descriptor entity".into(),
        ),
        Some(d) => {
            let profiles: Vec<&str> = as_list(d.get("conformsTo"))
                .into_iter()
                .filter_map(ref_id)
                .collect();
            let root_profiles: Vec<&str> = graph
                .root
                .map(|r| {
                    as_list(r.get("conformsTo"))
                        .into_iter()
                        .filter_map(ref_id)
                        .collect()
                })
                .unwrap_or_default();
            if !profiles
                .iter()
                .chain(&root_profiles)
                .any(|p| *p == WORKFLOW_CRATE_PROFILE)
            {
                push(
                    FindingCode::ProfileMissing,
                    format!("crate does not declare conformance to {WORKFLOW_CRATE_PROFILE}"),
                );
            }
        }
    }

    match graph.root {
        None => push(FindingCode::RootMissing, "no root dataset entity".into()),
        Some(root) => {
            if !has_type(root, "Dataset") {
                push(
                    FindingCode::RootMissing,
                    "root entity is not a Dataset".into(),
                );
            }
            if root.get("license").is_none() {
                push(
                    FindingCode::LicenseMissing,
                    "root dataset has no license".into(),
                );
            }
            match graph.main_entity_id() {
                None => push(
                    FindingCode::MainEntityMissing,
                    "root dataset has no mainEntity".into(),
                ),
                Some(id) => match graph.entities.get(id) {
                    None => push(
                        FindingCode::MainEntityMissing,
                        format!("mainEntity `{id}` has no entity"),
                    ),
                    Some(main) => {
                        let missing: Vec<&str> =
                            ["File", "SoftwareSourceCode", "ComputationalWorkflow"]
                                .into_iter()
                                .filter(|t| !has_type(main, t))
                                .collect();
                        if !missing.is_empty() {
                            push(
                                FindingCode::MainEntityType,
                                format!("mainEntity `{id}` lacks types {}", missing.join(", ")),
                            );
                        }
                        if main.get("programmingLanguage").is_none() {
                            push(
                                FindingCode::ProgrammingLanguageMissing,
                                format!("mainEntity `{id}` has no programmingLanguage"),
                            );
                        }
                    }
                },
            }
        }
    }

    // Local data entities must be present; present files should be described.
    let mut described_files = BTreeSet::new();
    let mut described_dirs = Vec::new();
    for e in &graph.order {
        let Some(id) = e.get("@id").and_then(Value::as_str) else {
            continue;
        };
        if id.starts_with('#') || id.contains("://") || id == "./" {
            continue;
        }
        let path = id_to_path(id);
        if has_type(e, "File") {
            if !files.contains(&path) {
                push(
                    FindingCode::FileMissing,
                    format!("`{id}` is described but not in the archive"),
                );
            }
            described_files.insert(path);
        } else if has_type(e, "Dataset") {
            described_dirs.push(format!("{}/", path.trim_end_matches('/')));
        }
    }
    for path in files.paths() {
        let listed = described_files.contains(path)
            || described_dirs.iter().any(|d| path.starts_with(d.as_str()))
            || UNLISTED_OK.contains(&path);
        if !listed {
            push(
                FindingCode::OrphanFile,
                format!("`{path}` is not described in the metadata"),
            );
        }
    }

    ConformanceReport::from_findings(findings)
}
