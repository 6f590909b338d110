use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::files::FileTree;
use super::ids::{AssetId, ClassId, EntryId, TeamId, UserId};
use super::orcid::Orcid;
use super::policy::{AccessPolicy, Protected};
use crate::parsers::WorkflowStructure;

/// A person credited as creator of a workflow. Not necessarily a registered
/// user.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Creator {
    pub name: String,
    #[serde(default)]
    pub orcid: Option<Orcid>,
    #[serde(default)]
    pub affiliation: Option<String>,
}

impl Creator {
    pub fn named(name: impl Into<String>) -> Self {
        Creator {
            name: name.into(),
            orcid: None,
            affiliation: None,
        }
    }
}

/// Creator-declared readiness of a workflow.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Maturity(pub String);

impl Maturity {
    pub const WORK_IN_PROGRESS: &'static str = "work_in_progress";
    pub const STABLE: &'static str = "stable";

    pub fn work_in_progress() -> Self {
        Maturity(Self::WORK_IN_PROGRESS.to_string())
    }

    pub fn stable() -> Self {
        Maturity(Self::STABLE.to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Default for Maturity {
    fn default() -> Self {
        Maturity::work_in_progress()
    }
}

impl fmt::Display for Maturity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A software tool used by a workflow, optionally linked to bio.tools.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ToolRef {
    pub raw_id: String,
    #[serde(default)]
    pub biotools_id: Option<String>,
    pub display_name: String,
}

impl ToolRef {
    pub fn unmapped(raw_id: impl Into<String>) -> Self {
        let raw_id = raw_id.into();
        ToolRef {
            display_name: raw_id.clone(),
            raw_id,
            biotools_id: None,
        }
    }

    pub fn biotools_iri(&self) -> Option<String> {
        self.biotools_id
            .as_ref()
            .map(|id| format!("https://bio.tools/{id}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Passing,
    Failing,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub views: u64,
    pub downloads: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VersionSource {
    Upload,
    CrateImport,
    GitImport {
        remote: String,
        commit_id: String,
        #[serde(default)]
        git_ref: Option<String>,
    },
}

impl VersionSource {
    pub fn is_upload(&self) -> bool {
        matches!(self, VersionSource::Upload)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowVersion {
    pub version: u32,
    pub files: FileTree,
    pub main_workflow_path: String,
    #[serde(default)]
    pub diagram_path: Option<String>,
    #[serde(default)]
    pub abstract_cwl_path: Option<String>,
    pub source: VersionSource,
    #[serde(default)]
    pub frozen: bool,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub revision_comment: String,
    /// Structure parsed from the main workflow file, when the class has a parser.
    #[serde(default)]
    pub structure: Option<WorkflowStructure>,
    /// RO-Crate entities carried over verbatim from an imported crate.
    #[serde(default)]
    pub crate_extras: Vec<serde_json::Value>,
}

impl WorkflowVersion {
    pub fn main_file(&self) -> Option<&[u8]> {
        self.files.bytes(&self.main_workflow_path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoiRecord {
    pub doi: String,
    pub entry_id: EntryId,
    pub version: u32,
    pub datacite_payload: serde_json::Value,
    pub minted_at: DateTime<Utc>,
}

impl DoiRecord {
    pub fn iri(&self) -> String {
        format!("https://doi.org/{}", self.doi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkflowEntry {
    pub id: EntryId,
    pub title: String,
    pub team_ids: BTreeSet<TeamId>,
    #[serde(default)]
    pub creators: Vec<Creator>,
    #[serde(default)]
    pub other_contributors: String,
    /// Registered users credited as contributors.
    #[serde(default)]
    pub contributor_ids: Vec<UserId>,
    pub submitter: UserId,
    #[serde(default)]
    pub description: String,
    pub workflow_class: ClassId,
    #[serde(default)]
    pub maturity: Maturity,
    #[serde(default)]
    pub license: Option<String>,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub edam_topics: Vec<String>,
    #[serde(default)]
    pub edam_operations: Vec<String>,
    #[serde(default)]
    pub tool_refs: Vec<ToolRef>,
    /// Entries this workflow is based on.
    #[serde(default)]
    pub attributions: Vec<EntryId>,
    #[serde(default)]
    pub custom_citation: Option<String>,
    #[serde(default)]
    pub test_status: Option<TestStatus>,
    /// Link to the development repository, when known.
    #[serde(default)]
    pub source_url: Option<String>,
    #[serde(default)]
    pub versions: Vec<WorkflowVersion>,
    #[serde(default)]
    pub metrics: Metrics,
    #[serde(default)]
    pub policy: AccessPolicy,
    #[serde(default)]
    pub doi_records: BTreeMap<u32, DoiRecord>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

impl WorkflowEntry {
    /// A bare entry with only the mandatory fields set.
    pub fn new(
        id: EntryId,
        title: impl Into<String>,
        team_ids: impl IntoIterator<Item = TeamId>,
        submitter: UserId,
        class: ClassId,
        now: DateTime<Utc>,
    ) -> Self {
        WorkflowEntry {
            id,
            title: title.into(),
            team_ids: team_ids.into_iter().collect(),
            creators: Vec::new(),
            other_contributors: String::new(),
            contributor_ids: Vec::new(),
            submitter,
            description: String::new(),
            workflow_class: class,
            maturity: Maturity::default(),
            license: None,
            tags: Vec::new(),
            edam_topics: Vec::new(),
            edam_operations: Vec::new(),
            tool_refs: Vec::new(),
            attributions: Vec::new(),
            custom_citation: None,
            test_status: None,
            source_url: None,
            versions: Vec::new(),
            metrics: Metrics::default(),
            policy: AccessPolicy::default(),
            doi_records: BTreeMap::new(),
            created_at: now,
            updated_at: now,
        }
    }

    pub fn version(&self, v: u32) -> Option<&WorkflowVersion> {
        self.versions.iter().find(|x| x.version == v)
    }

    pub fn version_mut(&mut self, v: u32) -> Option<&mut WorkflowVersion> {
        self.versions.iter_mut().find(|x| x.version == v)
    }

    pub fn latest_version(&self) -> Option<&WorkflowVersion> {
        self.versions.iter().max_by_key(|v| v.version)
    }

    pub fn next_version_number(&self) -> u32 {
        self.versions.iter().map(|v| v.version).max().unwrap_or(0) + 1
    }
}

impl Protected for WorkflowEntry {
    fn policy(&self) -> &AccessPolicy {
        &self.policy
    }

    fn owner_team_ids(&self) -> &BTreeSet<TeamId> {
        &self.team_ids
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Workflow,
    Document,
    Sop,
    Publication,
    Presentation,
    DataFile,
    Event,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemTarget {
    /// A registered workflow entry or asset.
    Id(u64),
    Url(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollectionItem {
    pub kind: ItemKind,
    pub target: ItemTarget,
}

impl CollectionItem {
    pub fn workflow(id: EntryId) -> Self {
        CollectionItem {
            kind: ItemKind::Workflow,
            target: ItemTarget::Id(id.0),
        }
    }

    pub fn entry_id(&self) -> Option<EntryId> {
        match (self.kind, &self.target) {
            (ItemKind::Workflow, ItemTarget::Id(id)) => Some(EntryId(*id)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collection {
    pub id: super::ids::CollectionId,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub curator_team_ids: BTreeSet<TeamId>,
    #[serde(default)]
    pub items: Vec<CollectionItem>,
}

impl Collection {
    pub fn contains(&self, item: &CollectionItem) -> bool {
        self.items.contains(item)
    }
}

/// Content of a non-workflow asset: hosted by value or linked by reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AssetContent {
    Stored { files: FileTree },
    Reference { url: String, citation: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Asset {
    pub id: AssetId,
    pub kind: ItemKind,
    pub title: String,
    pub content: AssetContent,
    pub team_ids: BTreeSet<TeamId>,
    #[serde(default)]
    pub policy: AccessPolicy,
}

impl Protected for Asset {
    fn policy(&self) -> &AccessPolicy {
        &self.policy
    }

    fn owner_team_ids(&self) -> &BTreeSet<TeamId> {
        &self.team_ids
    }
}
