//! Editing, versioning and reading of workflow entries.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::events::EventKind;
use super::{guard, Registry, RegistryError, State, KIND_WORKFLOWS};
use crate::model::{
    resolve_credit, validate_entry, AccessPolicy, Creator, CreditGraph, EntryId, Maturity, Metrics,
    Right, TeamId, TestStatus, ToolRef, UserId, WorkflowEntry, WorkflowVersion,
};
use crate::rocrate::{CrateBuilder, WorkflowCrate};

/// Changes to the editable fields of an entry. Absent fields are left
/// alone; an empty string clears `license` and `custom_citation`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetadataPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub creators: Option<Vec<Creator>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_contributors: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contributor_ids: Option<Vec<UserId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maturity: Option<Maturity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub license: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tags: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edam_topics: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edam_operations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_refs: Option<Vec<ToolRef>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributions: Option<Vec<EntryId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_citation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub team_ids: Option<BTreeSet<TeamId>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<AccessPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_status: Option<TestStatus>,
}

fn blank_to_none(s: &str) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

impl MetadataPatch {
    pub fn is_empty(&self) -> bool {
        *self == MetadataPatch::default()
    }

    pub fn title(mut self, t: impl Into<String>) -> Self {
        self.title = Some(t.into());
        self
    }

    pub fn teams(mut self, teams: impl IntoIterator<Item = TeamId>) -> Self {
        self.team_ids = Some(teams.into_iter().collect());
        self
    }

    pub fn apply(&self, e: &mut WorkflowEntry) {
        let p = self.clone();
        if let Some(v) = p.title {
            e.title = v.trim().to_string();
        }
        if let Some(v) = p.description {
            e.description = v;
        }
        if let Some(v) = p.creators {
            e.creators = v;
        }
        if let Some(v) = p.other_contributors {
            e.other_contributors = v;
        }
        if let Some(v) = p.contributor_ids {
            e.contributor_ids = v;
        }
        if let Some(v) = p.maturity {
            e.maturity = v;
        }
        if let Some(v) = p.license {
            e.license = blank_to_none(&v);
        }
        if let Some(v) = p.tags {
            e.tags = v;
        }
        if let Some(v) = p.edam_topics {
            e.edam_topics = v;
        }
        if let Some(v) = p.edam_operations {
            e.edam_operations = v;
        }
        if let Some(v) = p.tool_refs {
            e.tool_refs = v;
        }
        if let Some(v) = p.attributions {
            e.attributions = v;
        }
        if let Some(v) = p.custom_citation {
            e.custom_citation = blank_to_none(&v);
        }
        if let Some(v) = p.team_ids {
            e.team_ids = v;
        }
        if let Some(v) = p.policy {
            e.policy = v;
        }
        if let Some(v) = p.source_url {
            e.source_url = blank_to_none(&v);
        }
        if let Some(v) = p.test_status {
            e.test_status = Some(v);
        }
    }

    /// Names of the fields the patch touches.
    pub fn fields(&self) -> Vec<&'static str> {
        let v = serde_json::to_value(self).unwrap_or_default();
        let touched: HashSet<String> = v
            .as_object()
            .map(|o| o.keys().cloned().collect())
            .unwrap_or_default();
        FIELD_NAMES
            .iter()
            .copied()
            .filter(|f| touched.contains(*f))
            .collect()
    }
}

const FIELD_NAMES: [&str; 17] = [
    "title",
    "description",
    "creators",
    "other_contributors",
    "contributor_ids",
    "maturity",
    "license",
    "tags",
    "edam_topics",
    "edam_operations",
    "tool_refs",
    "attributions",
    "custom_citation",
    "team_ids",
    "policy",
    "source_url",
    "test_status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    View,
    Download,
}

/// Whether adding `from -> to` edges closes a cycle in the attribution
/// graph. `links` holds each entry's proposed attribution list.
pub(crate) fn find_cycle(
    entries: &BTreeMap<EntryId, WorkflowEntry>,
    from: EntryId,
    links: &[EntryId],
) -> Option<EntryId> {
    let edges = |id: EntryId| -> Vec<EntryId> {
        if id == from {
            links.to_vec()
        } else {
            entries
                .get(&id)
                .map(|e| e.attributions.clone())
                .unwrap_or_default()
        }
    };
    for &start in links {
        if start == from {
            return Some(start);
        }
        let mut stack = vec![start];
        let mut seen = HashSet::new();
        while let Some(n) = stack.pop() {
            if n == from {
                return Some(start);
            }
            if seen.insert(n) {
                stack.extend(edges(n));
            }
        }
    }
    None
}

/// Checks teams, contributor links and attributions of a draft against
/// the current state.
pub(crate) fn check_references(state: &State, e: &WorkflowEntry) -> Result<(), RegistryError> {
    for t in &e.team_ids {
        if !state.teams.contains_key(t) {
            return Err(RegistryError::not_found("team", t));
        }
    }
    for u in &e.contributor_ids {
        if !state.users.contains_key(u) {
            return Err(RegistryError::not_found("user", u));
        }
    }
    for a in &e.attributions {
        if *a != e.id && !state.entries.contains_key(a) {
            return Err(RegistryError::not_found("workflow", a));
        }
    }
    if let Some(to) = find_cycle(&state.entries, e.id, &e.attributions) {
        return Err(RegistryError::AttributionCycle { from: e.id, to });
    }
    Ok(())
}

impl Registry {
    /// The entry as `actor` may see it.
    pub fn get_entry(
        &self,
        actor: Option<UserId>,
        id: EntryId,
    ) -> Result<WorkflowEntry, RegistryError> {
        let state = self.read();
        let user = state.user_ref(actor)?;
        let e = state.entry(id)?;
        self.ensure(&state, user, e, Right::View)?;
        Ok(e.clone())
    }

    /// Strongest right `actor` holds on an entry, if any.
    pub fn rights(&self, actor: Option<UserId>, id: EntryId) -> Result<Vec<Right>, RegistryError> {
        let state = self.read();
        let user = state.user_ref(actor)?;
        let e = state.entry(id)?;
        let today = self.today();
        Ok(Right::ALL
            .into_iter()
            .filter(|r| state.decide(user, e, *r, today).allowed)
            .collect())
    }

    pub fn get_version(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: Option<u32>,
    ) -> Result<(WorkflowEntry, WorkflowVersion), RegistryError> {
        let e = self.get_entry(actor, id)?;
        let v = match version {
            Some(n) => e.version(n).cloned(),
            None => e.latest_version().cloned(),
        }
        .ok_or_else(|| {
            RegistryError::not_found("version", format!("{id}/{}", version.unwrap_or(0)))
        })?;
        Ok((e, v))
    }

    /// Like [`Registry::get_version`] but checks `download`: for handing out
    /// file contents. Does not touch the metrics.
    pub fn version_contents(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: Option<u32>,
    ) -> Result<(WorkflowEntry, WorkflowVersion), RegistryError> {
        {
            let state = self.read();
            let user = state.user_ref(actor)?;
            let e = state.entry(id)?;
            guard(
                &state,
                user,
                e,
                Right::Download,
                self.today(),
                "workflow",
                id,
            )?;
        }
        self.get_version(actor, id, version)
    }

    /// Applies a patch after checking rights, references and validation.
    /// Changing teams or sharing requires `manage`; everything else `edit`.
    pub fn update_metadata(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        patch: &MetadataPatch,
    ) -> Result<WorkflowEntry, RegistryError> {
        let mut state = self.state.write();
        let user = state.user_ref(actor)?.cloned();
        let current = state.entry(id)?;
        let needed = if patch.policy.is_some() || patch.team_ids.is_some() {
            Right::Manage
        } else {
            Right::Edit
        };
        self.ensure(&state, user.as_ref(), current, needed)?;

        let mut draft = current.clone();
        patch.apply(&mut draft);
        draft.updated_at = self.now().max(current.updated_at);
        check_references(&state, &draft)?;
        let report = validate_entry(&draft, &self.validation_context());
        if !report.is_persistable() {
            return Err(RegistryError::Validation(report));
        }
        self.persist_entry(&draft)?;
        let payload = serde_json::json!({ "fields": patch.fields() });
        state.entries.insert(id, draft.clone());
        self.emit(&mut state, id, EventKind::MetadataChanged, payload)?;
        Ok(draft)
    }

    /// Freezes a version so its files can no longer change. Freezing twice
    /// is a no-op.
    pub fn freeze_version(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: u32,
    ) -> Result<WorkflowVersion, RegistryError> {
        let mut state = self.state.write();
        let user = state.user_ref(actor)?.cloned();
        let e = state.entry(id)?;
        self.ensure(&state, user.as_ref(), e, Right::Manage)?;
        let v = e
            .version(version)
            .ok_or_else(|| RegistryError::not_found("version", format!("{id}/{version}")))?;
        if v.frozen {
            return Ok(v.clone());
        }
        let mut draft = e.clone();
        let dv = draft.version_mut(version).expect("version checked above");
        dv.frozen = true;
        let out = dv.clone();
        self.persist_entry(&draft)?;
        state.entries.insert(id, draft);
        Ok(out)
    }

    /// Adds or replaces one file of an uploaded, unfrozen version.
    pub fn put_file(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: u32,
        path: &str,
        content: Vec<u8>,
    ) -> Result<WorkflowVersion, RegistryError> {
        let path = crate::model::normalize_path(path);
        if path.is_empty() || path.split('/').any(|s| s == "..") {
            return Err(RegistryError::InvalidInput(format!(
                "bad file path `{path}`"
            )));
        }
        if content.len() > self.config.max_file_bytes() {
            return Err(RegistryError::InvalidInput(format!(
                "`{path}` exceeds the {} MB file limit",
                self.config.max_file_mb
            )));
        }
        self.mutate_files(actor, id, version, |v| {
            v.files.insert(path.clone(), content);
            Ok(())
        })
    }

    /// Removes a file from an uploaded, unfrozen version. The main workflow
    /// file cannot be removed.
    pub fn remove_file(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: u32,
        path: &str,
    ) -> Result<WorkflowVersion, RegistryError> {
        self.mutate_files(actor, id, version, |v| {
            if v.main_workflow_path == path {
                return Err(RegistryError::Conflict(
                    "the main workflow file cannot be removed".into(),
                ));
            }
            v.files
                .remove(path)
                .map(|_| ())
                .ok_or_else(|| RegistryError::not_found("file", path))
        })
    }

    fn mutate_files(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: u32,
        change: impl FnOnce(&mut WorkflowVersion) -> Result<(), RegistryError>,
    ) -> Result<WorkflowVersion, RegistryError> {
        let mut state = self.state.write();
        let user = state.user_ref(actor)?.cloned();
        let e = state.entry(id)?;
        self.ensure(&state, user.as_ref(), e, Right::Edit)?;
        let mut draft = e.clone();
        let v = draft
            .version_mut(version)
            .ok_or_else(|| RegistryError::not_found("version", format!("{id}/{version}")))?;
        if v.frozen {
            return Err(RegistryError::FrozenVersion { entry: id, version });
        }
        if !v.source.is_upload() {
            return Err(RegistryError::Conflict(
                "files of imported versions follow their source and cannot be edited".into(),
            ));
        }
        change(v)?;
        if v.diagram_path
            .as_deref()
            .is_some_and(|p| !v.files.contains(p))
        {
            v.diagram_path = None;
        }
        if v.abstract_cwl_path
            .as_deref()
            .is_some_and(|p| !v.files.contains(p))
        {
            v.abstract_cwl_path = None;
        }
        let out = v.clone();
        draft.updated_at = self.now().max(draft.updated_at);
        self.persist_entry(&draft)?;
        state.entries.insert(id, draft);
        Ok(out)
    }

    /// Deletes an entry and removes it from collections. Requires `manage`.
    /// Entries with minted DOIs are kept: a DOI must keep resolving.
    pub fn delete_entry(&self, actor: Option<UserId>, id: EntryId) -> Result<(), RegistryError> {
        let mut state = self.state.write();
        let user = state.user_ref(actor)?.cloned();
        let e = state.entry(id)?;
        self.ensure(&state, user.as_ref(), e, Right::Manage)?;
        if !e.doi_records.is_empty() {
            return Err(RegistryError::Conflict(
                "entries with DOIs cannot be deleted".into(),
            ));
        }
        if let Some(child) = state
            .entries
            .values()
            .find(|o| o.attributions.contains(&id))
        {
            return Err(RegistryError::Conflict(format!(
                "entry {} is based on this one",
                child.id
            )));
        }
        let mut touched = Vec::new();
        for c in state.collections.values() {
            if c.items.iter().any(|i| i.entry_id() == Some(id)) {
                let mut c = c.clone();
                c.items.retain(|i| i.entry_id() != Some(id));
                touched.push(c);
            }
        }
        for c in &touched {
            self.persist(super::KIND_COLLECTIONS, c.id, c)?;
        }
        self.unpersist(KIND_WORKFLOWS, id)?;
        for c in touched {
            state.collections.insert(c.id, c);
        }
        state.entries.remove(&id);
        let subs: Vec<_> = state
            .subscriptions
            .iter()
            .filter(|(_, e)| *e == id)
            .copied()
            .collect();
        for s in subs {
            state.subscriptions.remove(&s);
        }
        self.persist_meta(&state)?;
        Ok(())
    }

    /// Increments a usage counter by one.
    pub fn record_activity(
        &self,
        id: EntryId,
        kind: ActivityKind,
    ) -> Result<Metrics, RegistryError> {
        let mut state = self.state.write();
        let e = state
            .entries
            .get(&id)
            .ok_or_else(|| RegistryError::not_found("workflow", id))?;
        let mut draft = e.clone();
        match kind {
            ActivityKind::View => draft.metrics.views += 1,
            ActivityKind::Download => draft.metrics.downloads += 1,
        }
        let metrics = draft.metrics;
        // File blobs are already stored; only the entry document changes.
        self.persist(KIND_WORKFLOWS, id, &draft)?;
        state.entries.insert(id, draft);
        Ok(metrics)
    }

    /// Builds the RO-Crate for a version. Needs `download`; counts as a
    /// download.
    pub fn entry_crate(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: Option<u32>,
    ) -> Result<WorkflowCrate, RegistryError> {
        let built = {
            let state = self.read();
            let user = state.user_ref(actor)?;
            let e = state.entry(id)?;
            guard(
                &state,
                user,
                e,
                Right::Download,
                self.today(),
                "workflow",
                id,
            )?;
            let v = match version {
                Some(n) => e.version(n),
                None => e.latest_version(),
            }
            .ok_or_else(|| {
                RegistryError::not_found("version", format!("{id}/{}", version.unwrap_or(0)))
            })?;
            self.crate_for(&state, e, v)?
        };
        self.record_activity(id, ActivityKind::Download)?;
        Ok(built)
    }

    /// The `ro-crate-metadata.json` document of a version. Needs `view`
    /// only and does not count as a download.
    pub fn crate_metadata(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: Option<u32>,
    ) -> Result<serde_json::Value, RegistryError> {
        let (e, v) = self.get_version(actor, id, version)?;
        let state = self.read();
        Ok(self.crate_for(&state, &e, &v)?.metadata)
    }

    /// Bioschemas JSON-LD for a version.
    pub fn bioschemas(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: Option<u32>,
    ) -> Result<serde_json::Value, RegistryError> {
        let (e, v) = self.get_version(actor, id, version)?;
        Ok(crate::bioschemas::emit_bioschemas(
            &e,
            &v,
            self.base_url(),
            &self.classes(),
        ))
    }

    /// Crate for a version with this registry's base URL and team names,
    /// without access checks or metrics.
    pub(crate) fn crate_for(
        &self,
        state: &State,
        e: &WorkflowEntry,
        v: &WorkflowVersion,
    ) -> Result<WorkflowCrate, RegistryError> {
        let names = e
            .team_ids
            .iter()
            .filter_map(|t| state.teams.get(t).map(|team| (*t, team.name.clone())))
            .collect();
        let classes = self.classes();
        Ok(CrateBuilder::new(self.base_url(), &classes)
            .with_team_names(names)
            .build(e, v)?)
    }

    /// Everyone and everything credited for an entry.
    pub fn credit(&self, actor: Option<UserId>, id: EntryId) -> Result<CreditGraph, RegistryError> {
        let state = self.read();
        let user = state.user_ref(actor)?;
        let e = state.entry(id)?;
        self.ensure(&state, user, e, Right::View)?;
        resolve_credit(&*state, e).map_err(|err| RegistryError::Storage(err.to_string()))
    }

    /// Entries whose attributions point at `id` and that the actor may view.
    pub fn derived_entries(
        &self,
        actor: Option<UserId>,
        id: EntryId,
    ) -> Result<Vec<EntryId>, RegistryError> {
        let state = self.read();
        let user = state.user_ref(actor)?;
        let today = self.today();
        Ok(state
            .entries
            .values()
            .filter(|e| e.attributions.contains(&id))
            .filter(|e| state.decide(user, *e, Right::View, today).allowed)
            .map(|e| e.id)
            .collect())
    }
}
