//! The registration pipeline and version succession.
//!
//! acquire files → detect class → parse structure → prefill metadata →
//! apply overrides → validate → persist.
//!
//! Acquisition and parsing run without holding the registry lock; the
//! remaining steps run under the write lock so the draft is checked against
//! the state it is committed to.

use serde::{Deserialize, Serialize};

use super::entries::{check_references, MetadataPatch};
use super::events::EventKind;
use super::{Counters, Registry, RegistryError, State};
use crate::citation::{parse_citation_cff, CitationMetadata};
use crate::git::{
    citation_file, detect_workflow_files, enumerate_releases, extract_readme, import_repository,
    RepositorySnapshot,
};
use crate::model::{
    normalize_path, validate_entry, ClassId, EntryId, FileTree, Grant, Right, Subject, User,
    UserId, ValidationReport, VersionSource, WorkflowEntry, WorkflowVersion,
};
use crate::parsers::{
    detect_class, generate_abstract_cwl, map_tools_to_biotools, parse_cwl_abstract,
    parse_structure, WorkflowStructure,
};
use crate::rocrate::{read_crate_with, CrateContents};

/// Where the files of a new entry or version come from.
#[derive(Debug, Clone, PartialEq)]
pub enum RegistrationSource {
    /// Files uploaded directly. Without `main_path` the best detected
    /// workflow file is used.
    Upload {
        files: FileTree,
        main_path: Option<String>,
    },
    CrateImport {
        archive: Vec<u8>,
    },
    GitImport {
        remote: String,
        git_ref: Option<String>,
        main_path: Option<String>,
    },
}

impl RegistrationSource {
    pub fn upload(files: FileTree, main_path: impl Into<String>) -> Self {
        RegistrationSource::Upload {
            files,
            main_path: Some(main_path.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationRequest {
    pub source: RegistrationSource,
    /// Caller-supplied metadata, applied over everything prefilled.
    pub patch: MetadataPatch,
    pub class: Option<ClassId>,
    pub diagram_path: Option<String>,
    pub revision_comment: String,
}

impl RegistrationRequest {
    pub fn new(source: RegistrationSource, patch: MetadataPatch) -> Self {
        RegistrationRequest {
            source,
            patch,
            class: None,
            diagram_path: None,
            revision_comment: String::new(),
        }
    }
}

/// Outcome of the pipeline: the entry, its validation warnings, and notes
/// about steps that degraded gracefully (such as a parser failure).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registration {
    pub entry: WorkflowEntry,
    pub report: ValidationReport,
    pub notes: Vec<String>,
}

/// Files and everything learned from them before any metadata is decided.
struct Acquired {
    files: FileTree,
    main_path: String,
    class: ClassId,
    source: VersionSource,
    structure: Option<WorkflowStructure>,
    edam_topics: Vec<String>,
    edam_operations: Vec<String>,
    crate_contents: Option<CrateContents>,
    readme: Option<String>,
    citation: Option<CitationMetadata>,
    source_url: Option<String>,
    diagram_path: Option<String>,
    abstract_cwl_path: Option<String>,
    notes: Vec<String>,
}

fn stem(path: &str) -> &str {
    let name = path.rsplit('/').next().unwrap_or(path);
    name.split_once('.').map_or(name, |(s, _)| s)
}

fn sibling(main: &str, name: &str) -> String {
    match main.rsplit_once('/') {
        Some((dir, _)) => format!("{dir}/{name}"),
        None => name.to_string(),
    }
}

const IMAGE_EXTENSIONS: [&str; 5] = ["svg", "png", "jpg", "jpeg", "gif"];

/// An image named after the main workflow, else one containing "diagram".
fn find_diagram(files: &FileTree, main: &str) -> Option<String> {
    let main_stem = stem(main).to_ascii_lowercase();
    let mut hits: Vec<&str> = files
        .paths()
        .filter(|p| {
            let ext = p.rsplit('.').next().unwrap_or("").to_ascii_lowercase();
            if !IMAGE_EXTENSIONS.contains(&ext.as_str()) {
                return false;
            }
            let s = stem(p).to_ascii_lowercase();
            s == main_stem || s.contains("diagram")
        })
        .collect();
    hits.sort_by_key(|p| {
        (
            stem(p).to_ascii_lowercase() != main_stem,
            p.matches('/').count(),
            *p,
        )
    });
    hits.first().map(|p| p.to_string())
}

fn readme_title(readme: &str) -> Option<String> {
    readme
        .lines()
        .find_map(|l| l.trim().strip_prefix("# "))
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
}

fn is_web_remote(remote: &str) -> bool {
    remote.starts_with("https://") || remote.starts_with("http://")
}

impl Registry {
    fn check_file_sizes(&self, files: &FileTree) -> Result<(), RegistryError> {
        let limit = self.config.max_file_bytes();
        for (path, blob) in files.iter() {
            if blob.size() > limit as u64 {
                return Err(RegistryError::InvalidInput(format!(
                    "`{path}` exceeds the {} MB file limit",
                    self.config.max_file_mb
                )));
            }
        }
        Ok(())
    }

    fn choose_main(&self, files: &FileTree, main: Option<String>) -> Result<String, RegistryError> {
        match main {
            Some(m) => {
                let m = normalize_path(&m);
                if files.contains(&m) {
                    Ok(m)
                } else {
                    Err(RegistryError::InvalidInput(format!(
                        "main workflow `{m}` is not among the files"
                    )))
                }
            }
            None => detect_workflow_files(files, &self.classes())
                .into_iter()
                .next()
                .map(|(p, _)| p)
                .ok_or_else(|| RegistryError::InvalidInput("no workflow file found".into())),
        }
    }

    fn fetch(
        &self,
        remote: &str,
        git_ref: Option<&str>,
    ) -> Result<RepositorySnapshot, RegistryError> {
        Ok(import_repository(remote, git_ref)?)
    }

    fn acquire(
        &self,
        source: RegistrationSource,
        class: Option<ClassId>,
        diagram: Option<String>,
    ) -> Result<Acquired, RegistryError> {
        let (files, main_path, version_source, crate_contents, source_url) = match source {
            RegistrationSource::Upload { files, main_path } => {
                let main = self.choose_main(&files, main_path)?;
                (files, main, VersionSource::Upload, None, None)
            }
            RegistrationSource::CrateImport { archive } => {
                if archive.len() as u64 > self.config.max_crate_bytes() {
                    return Err(crate::rocrate::CrateError::SizeLimit {
                        limit: self.config.max_crate_bytes(),
                    }
                    .into());
                }
                let contents = {
                    let classes = self.classes();
                    read_crate_with(&archive, &classes, self.config.max_crate_bytes())?
                };
                let url = contents.metadata.source_url.clone();
                (
                    contents.files.clone(),
                    contents.main_workflow_path.clone(),
                    VersionSource::CrateImport,
                    Some(contents),
                    url,
                )
            }
            RegistrationSource::GitImport {
                remote,
                git_ref,
                main_path,
            } => {
                let snap = self.fetch(&remote, git_ref.as_deref())?;
                let main = self.choose_main(&snap.files, main_path)?;
                let url = is_web_remote(&remote).then(|| remote.clone());
                let source = VersionSource::GitImport {
                    remote,
                    commit_id: snap.commit_id,
                    git_ref,
                };
                (snap.files, main, source, None, url)
            }
        };
        self.check_file_sizes(&files)?;
        let mut notes = Vec::new();

        let class = match class.or_else(|| {
            crate_contents
                .as_ref()
                .and_then(|c| c.metadata.class.clone())
        }) {
            Some(c) => c,
            None => {
                let bytes = files.bytes(&main_path).unwrap_or_default();
                detect_class(&self.classes(), &main_path, bytes)?
            }
        };

        let structure = match parse_structure(&class, &files, &main_path) {
            Ok(s) => s,
            Err(e) => {
                notes.push(format!("could not parse `{main_path}`: {e}"));
                None
            }
        };
        let (edam_topics, edam_operations) = match class.as_str() {
            "cwl" => files
                .bytes(&main_path)
                .and_then(|b| parse_cwl_abstract(b).ok())
                .map(|a| (a.edam_topics, a.edam_operations))
                .unwrap_or_default(),
            _ => Default::default(),
        };

        let mut files = files;
        let mut abstract_cwl_path = crate_contents
            .as_ref()
            .and_then(|c| c.abstract_cwl_path.clone());
        if abstract_cwl_path.is_none() && class.as_str() != "cwl" {
            if let Some(s) = structure
                .as_ref()
                .filter(|s| !(s.inputs.is_empty() && s.outputs.is_empty() && s.steps.is_empty()))
            {
                let path = sibling(&main_path, &format!("{}.abstract.cwl", stem(&main_path)));
                if files.contains(&path) {
                    abstract_cwl_path = Some(path);
                } else {
                    match generate_abstract_cwl(s) {
                        Ok(doc) => {
                            files.insert(path.clone(), doc);
                            abstract_cwl_path = Some(path);
                        }
                        Err(e) => notes.push(format!("no abstract CWL generated: {e}")),
                    }
                }
            }
        }

        let diagram_path = match diagram {
            Some(d) => {
                let d = normalize_path(&d);
                if !files.contains(&d) {
                    return Err(RegistryError::InvalidInput(format!(
                        "diagram `{d}` is not among the files"
                    )));
                }
                Some(d)
            }
            None => crate_contents
                .as_ref()
                .and_then(|c| c.diagram_path.clone())
                .or_else(|| find_diagram(&files, &main_path)),
        };

        let readme = extract_readme(&files);
        let citation = match citation_file(&files).map(parse_citation_cff) {
            Some(Ok(c)) => {
                notes.extend(c.warnings.iter().map(|w| format!("CITATION.cff: {w}")));
                Some(c)
            }
            Some(Err(e)) => {
                notes.push(format!("CITATION.cff ignored: {e}"));
                None
            }
            None => None,
        };

        Ok(Acquired {
            files,
            main_path,
            class,
            source: version_source,
            structure,
            edam_topics,
            edam_operations,
            crate_contents,
            readme,
            citation,
            source_url,
            diagram_path,
            abstract_cwl_path,
            notes,
        })
    }

    fn version_from(&self, acq: &Acquired, number: u32, comment: &str) -> WorkflowVersion {
        WorkflowVersion {
            version: number,
            files: acq.files.clone(),
            main_workflow_path: acq.main_path.clone(),
            diagram_path: acq.diagram_path.clone(),
            abstract_cwl_path: acq.abstract_cwl_path.clone(),
            source: acq.source.clone(),
            frozen: false,
            created_at: self.now(),
            revision_comment: comment.to_string(),
            structure: acq.structure.clone(),
            crate_extras: acq
                .crate_contents
                .as_ref()
                .map(|c| c.extras.clone())
                .unwrap_or_default(),
        }
    }

    /// Builds the entry from what was acquired plus the caller's patch.
    fn draft(
        &self,
        state: &State,
        actor: &User,
        acq: &Acquired,
        req: &RegistrationRequest,
        id: EntryId,
    ) -> Result<WorkflowEntry, RegistryError> {
        let mut e = WorkflowEntry::new(id, "", [], actor.id, acq.class.clone(), self.now());
        let base = self.base_url();

        if let Some(c) = &acq.crate_contents {
            let m = &c.metadata;
            e.title = m.title.clone().unwrap_or_default();
            e.description = m.description.clone().unwrap_or_default();
            e.license = m.license.clone();
            e.creators = m.creators.clone();
            e.edam_topics = m.edam_topics.clone();
            e.edam_operations = m.edam_operations.clone();
            e.tags = m.tags.clone();
            if let Some(mt) = &m.maturity {
                e.maturity = mt.clone();
            }
            e.tool_refs = m.tool_refs.clone();
            e.attributions = m
                .attribution_ids(base)
                .into_iter()
                .filter(|a| state.entries.contains_key(a))
                .collect();
            e.custom_citation = m.custom_citation.clone();
            e.other_contributors = m.other_contributors.clone().unwrap_or_default();
            e.contributor_ids = m
                .contributor_ids(base)
                .into_iter()
                .filter(|u| state.users.contains_key(u))
                .collect();
            e.team_ids = m
                .team_ids(base)
                .into_iter()
                .filter(|t| actor.is_member_of(*t))
                .collect();
        }

        let s = acq.structure.as_ref();
        let cff = acq.citation.as_ref();
        if e.title.is_empty() {
            e.title = s
                .and_then(|s| s.name.clone())
                .or_else(|| cff.and_then(|c| c.title.clone()))
                .or_else(|| acq.readme.as_deref().and_then(readme_title))
                .unwrap_or_else(|| stem(&acq.main_path).to_string());
        }
        if e.description.is_empty() {
            e.description = s
                .and_then(|s| s.description.clone())
                .or_else(|| acq.readme.clone())
                .unwrap_or_default();
        }
        if e.creators.is_empty() {
            if let Some(c) = cff {
                e.creators = c.creators();
            }
        }
        if e.custom_citation.is_none() {
            e.custom_citation = cff.and_then(|c| c.preferred_citation.clone());
        }
        if e.tool_refs.is_empty() {
            if let Some(s) = s {
                e.tool_refs = map_tools_to_biotools(&s.raw_tool_ids);
            }
        }
        if e.edam_topics.is_empty() {
            e.edam_topics = acq.edam_topics.clone();
        }
        if e.edam_operations.is_empty() {
            e.edam_operations = acq.edam_operations.clone();
        }
        e.source_url = acq.source_url.clone();

        let caller_policy = req.patch.policy.is_some();
        req.patch.apply(&mut e);
        e.workflow_class = acq.class.clone();

        if let Some(first) = e.team_ids.iter().next().and_then(|t| state.teams.get(t)) {
            if e.license.is_none() {
                e.license = Some(first.default_license.clone());
            }
            if !caller_policy {
                e.policy = first.default_policy.clone();
            }
        }
        for t in e.team_ids.clone() {
            e.policy.add_grant(Subject::Team(t), Right::Edit);
        }
        e.policy.add_grant(Subject::User(actor.id), Right::Manage);
        e.policy.grants.sort_by_key(|g: &Grant| g.subject);

        e.versions = vec![self.version_from(acq, 1, &req.revision_comment)];
        Ok(e)
    }

    fn check_draft(
        &self,
        state: &State,
        actor: &User,
        e: &WorkflowEntry,
    ) -> Result<ValidationReport, RegistryError> {
        check_references(state, e)?;
        if !e.team_ids.is_empty() && !e.team_ids.iter().any(|t| actor.is_member_of(*t)) {
            return Err(RegistryError::Forbidden(
                "the submitter must belong to one of the owning teams".into(),
            ));
        }
        let report = validate_entry(e, &self.validation_context());
        if !report.is_persistable() {
            return Err(RegistryError::Validation(report));
        }
        Ok(report)
    }

    /// Runs the pipeline without storing anything, returning what would be
    /// registered. This is what a registration wizard shows for review.
    pub fn preview_registration(
        &self,
        actor: Option<UserId>,
        req: RegistrationRequest,
    ) -> Result<Registration, RegistryError> {
        self.read().require_user(actor)?;
        let acq = self.acquire(
            req.source.clone(),
            req.class.clone(),
            req.diagram_path.clone(),
        )?;
        let state = self.read();
        let user = state.require_user(actor)?;
        let entry = self.draft(&state, user, &acq, &req, EntryId(0))?;
        check_references(&state, &entry)?;
        let report = validate_entry(&entry, &self.validation_context());
        Ok(Registration {
            entry,
            report,
            notes: acq.notes,
        })
    }

    /// Registers a new workflow. Nothing is stored unless every step
    /// succeeds.
    pub fn register_workflow(
        &self,
        actor: Option<UserId>,
        req: RegistrationRequest,
    ) -> Result<Registration, RegistryError> {
        self.read().require_user(actor)?;
        let acq = self.acquire(
            req.source.clone(),
            req.class.clone(),
            req.diagram_path.clone(),
        )?;

        let mut state = self.state.write();
        let user = state.require_user(actor)?.clone();
        let mut counters = state.counters.clone();
        let id = EntryId(counters.entry + 1);
        let entry = self.draft(&state, &user, &acq, &req, id)?;
        let report = self.check_draft(&state, &user, &entry)?;

        Counters::bump(&mut counters.entry);
        self.persist_entry(&entry)?;
        self.persist_counters(&counters)?;
        state.counters = counters;
        state.entries.insert(id, entry.clone());
        tracing::info!(entry = %id, class = %entry.workflow_class, "registered workflow");
        Ok(Registration {
            entry,
            report,
            notes: acq.notes,
        })
    }

    /// Appends a version built from `source`. The entry's class is kept; the
    /// main file defaults to the previous version's path when present.
    pub fn add_version(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        source: RegistrationSource,
        revision_comment: &str,
    ) -> Result<WorkflowVersion, RegistryError> {
        let (class, prev_main) = {
            let state = self.read();
            let user = state.user_ref(actor)?;
            let e = state.entry(id)?;
            self.ensure(&state, user, e, Right::Edit)?;
            (
                e.workflow_class.clone(),
                e.latest_version().map(|v| v.main_workflow_path.clone()),
            )
        };
        let source = match source {
            RegistrationSource::Upload {
                files,
                main_path: None,
            } => {
                let main = prev_main.filter(|m| files.contains(m));
                RegistrationSource::Upload {
                    files,
                    main_path: main,
                }
            }
            other => other,
        };
        let acq = self.acquire(source, Some(class), None)?;
        self.commit_version(actor, id, &acq, revision_comment)
    }

    fn commit_version(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        acq: &Acquired,
        revision_comment: &str,
    ) -> Result<WorkflowVersion, RegistryError> {
        let mut state = self.state.write();
        let user = state.user_ref(actor)?.cloned();
        let e = state.entry(id)?;
        self.ensure(&state, user.as_ref(), e, Right::Edit)?;
        let mut draft = e.clone();
        let number = draft.next_version_number();
        let version = self.version_from(acq, number, revision_comment);
        draft.versions.push(version.clone());
        draft.updated_at = self.now().max(draft.updated_at);
        self.persist_entry(&draft)?;
        state.entries.insert(id, draft);
        let payload = serde_json::json!({ "version": number });
        self.emit(&mut state, id, EventKind::NewVersion, payload)?;
        Ok(version)
    }

    /// Creates one version per repository tag not yet imported, oldest tag
    /// first. The entry must have been imported from Git.
    pub fn sync_git(
        &self,
        actor: Option<UserId>,
        id: EntryId,
    ) -> Result<Vec<WorkflowVersion>, RegistryError> {
        let (remote, known_commits, known_tags, class, main) = {
            let state = self.read();
            let user = state.user_ref(actor)?;
            let e = state.entry(id)?;
            self.ensure(&state, user, e, Right::Edit)?;
            let remote = e
                .versions
                .iter()
                .rev()
                .find_map(|v| match &v.source {
                    VersionSource::GitImport { remote, .. } => Some(remote.clone()),
                    _ => None,
                })
                .ok_or_else(|| RegistryError::Conflict("entry has no Git source".into()))?;
            let mut commits = Vec::new();
            let mut tags = Vec::new();
            for v in &e.versions {
                if let VersionSource::GitImport {
                    commit_id, git_ref, ..
                } = &v.source
                {
                    commits.push(commit_id.clone());
                    tags.extend(git_ref.clone());
                }
            }
            let main = e.latest_version().map(|v| v.main_workflow_path.clone());
            (remote, commits, tags, e.workflow_class.clone(), main)
        };

        let head = self.fetch(&remote, None)?;
        let mut created = Vec::new();
        for release in enumerate_releases(&head) {
            if known_tags.contains(&release.tag) || known_commits.contains(&release.commit_id) {
                continue;
            }
            let snap = self.fetch(&remote, Some(&release.tag))?;
            let main_path = main.clone().filter(|m| snap.files.contains(m));
            let source = RegistrationSource::GitImport {
                remote: remote.clone(),
                git_ref: Some(release.tag.clone()),
                main_path,
            };
            let acq = self.acquire(source, Some(class.clone()), None)?;
            let comment = format!("release {}", release.tag);
            created.push(self.commit_version(actor, id, &acq, &comment)?);
        }
        Ok(created)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagram_detection() {
        let t = FileTree::new()
            .with("wf.ga", "{}")
            .with("img/wf.png", "x")
            .with("docs/pipeline-diagram.svg", "x")
            .with("logo.png", "x");
        assert_eq!(find_diagram(&t, "wf.ga").as_deref(), Some("img/wf.png"));
        assert_eq!(
            find_diagram(&t, "other.ga").as_deref(),
            Some("docs/pipeline-diagram.svg")
        );
        assert_eq!(
            find_diagram(&FileTree::new().with("a.ga", "{}"), "a.ga"),
            None
        );
    }

    #[test]
    fn readme_heading() {
        assert_eq!(
            readme_title("intro\n# My pipeline \nmore").as_deref(),
            Some("My pipeline")
        );
        assert_eq!(readme_title("## sub only"), None);
    }

    #[test]
    fn abstract_cwl_location() {
        assert_eq!(
            sibling("a/b/wf.ga", "wf.abstract.cwl"),
            "a/b/wf.abstract.cwl"
        );
        assert_eq!(sibling("main.nf", "main.abstract.cwl"), "main.abstract.cwl");
    }
}
