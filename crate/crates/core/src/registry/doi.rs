//! DOI minting with DataCite-shaped metadata.

use chrono::Datelike;
use parking_lot::Mutex;
use serde_json::{json, Value};

use super::events::EventKind;
use super::{Registry, RegistryError};
use crate::model::{DoiRecord, EntryId, Right, UserId, Visibility, WorkflowEntry};

pub const DOI_PUBLISHER: &str = "FlowHub";

/// Registers DOIs with an agency. Implementations must either register the
/// DOI or fail without side effects.
pub trait MintClient: Send + Sync {
    fn mint(&self, doi: &str, payload: &Value) -> Result<(), String>;
}

/// Records every request instead of contacting an agency.
#[derive(Debug, Default)]
pub struct MockMintClient {
    transcript: Mutex<Vec<(String, Value)>>,
    fail: Mutex<Option<String>>,
}

impl MockMintClient {
    /// Requests received so far, in order.
    pub fn transcript(&self) -> Vec<(String, Value)> {
        self.transcript.lock().clone()
    }

    /// Makes every following request fail with `message`, or succeed again
    /// with `None`.
    pub fn fail_with(&self, message: Option<&str>) {
        *self.fail.lock() = message.map(str::to_string);
    }
}

impl MintClient for MockMintClient {
    fn mint(&self, doi: &str, payload: &Value) -> Result<(), String> {
        if let Some(m) = self.fail.lock().clone() {
            return Err(m);
        }
        self.transcript
            .lock()
            .push((doi.to_string(), payload.clone()));
        Ok(())
    }
}

/// The DataCite metadata document for one version of an entry.
pub fn datacite_payload(entry: &WorkflowEntry, version: u32, doi: &str, base_url: &str) -> Value {
    let base_url = base_url.trim_end_matches('/');
    let creators: Vec<Value> = entry
        .creators
        .iter()
        .map(|c| {
            let mut node = json!({"name": c.name, "nameType": "Personal"});
            if let Some(o) = &c.orcid {
                node["nameIdentifiers"] = json!([{
                    "nameIdentifier": o.iri(),
                    "nameIdentifierScheme": "ORCID",
                    "schemeUri": "https://orcid.org",
                }]);
            }
            if let Some(a) = &c.affiliation {
                node["affiliation"] = json!([{"name": a}]);
            }
            node
        })
        .collect();
    let related: Vec<Value> = entry
        .attributions
        .iter()
        .map(|a| {
            json!({
                "relatedIdentifier": format!("{base_url}/workflows/{a}"),
                "relatedIdentifierType": "URL",
                "relationType": "IsDerivedFrom",
            })
        })
        .collect();
    let mut doc = json!({
        "data": {
            "type": "dois",
            "attributes": {
                "doi": doi,
                "event": "publish",
                "url": format!("{base_url}/workflows/{}?version={version}", entry.id),
                "creators": creators,
                "titles": [{"title": entry.title}],
                "publisher": DOI_PUBLISHER,
                "publicationYear": entry.updated_at.year(),
                "types": {"resourceTypeGeneral": "Workflow", "resourceType": entry.workflow_class.as_str()},
                "version": version.to_string(),
                "relatedIdentifiers": related,
            }
        }
    });
    let attrs = &mut doc["data"]["attributes"];
    if !entry.description.trim().is_empty() {
        attrs["descriptions"] =
            json!([{"description": entry.description, "descriptionType": "Abstract"}]);
    }
    if let Some(l) = &entry.license {
        attrs["rightsList"] = json!([{"rightsIdentifier": l, "rightsIdentifierScheme": "SPDX"}]);
    }
    if !entry.tags.is_empty() {
        attrs["subjects"] = entry.tags.iter().map(|t| json!({"subject": t})).collect();
    }
    doc
}

impl Registry {
    pub fn doi_for(&self, entry: EntryId, version: u32) -> String {
        format!("{}/wfhub.{entry}.{version}", self.config.doi_prefix)
    }

    /// Mints a DOI for a version of a public entry and freezes the version.
    /// Minting again returns the existing record.
    pub fn mint_doi(
        &self,
        actor: Option<UserId>,
        id: EntryId,
        version: u32,
    ) -> Result<DoiRecord, RegistryError> {
        let mut state = self.state.write();
        let user = state.user_ref(actor)?.cloned();
        let e = state.entry(id)?;
        self.ensure(&state, user.as_ref(), e, Right::Manage)?;
        if e.version(version).is_none() {
            return Err(RegistryError::not_found(
                "version",
                format!("{id}/{version}"),
            ));
        }
        if let Some(existing) = e.doi_records.get(&version) {
            return Ok(existing.clone());
        }
        if e.policy.visibility != Visibility::Public {
            return Err(RegistryError::VisibilityRequired);
        }

        let doi = self.doi_for(id, version);
        let payload = datacite_payload(e, version, &doi, self.base_url());
        self.minter
            .mint(&doi, &payload)
            .map_err(RegistryError::MintFailed)?;

        let record = DoiRecord {
            doi: doi.clone(),
            entry_id: id,
            version,
            datacite_payload: payload,
            minted_at: self.now(),
        };
        let mut draft = e.clone();
        draft.doi_records.insert(version, record.clone());
        draft.version_mut(version).expect("checked above").frozen = true;
        self.persist_entry(&draft)?;
        state.entries.insert(id, draft);
        self.emit(
            &mut state,
            id,
            EventKind::DoiMinted,
            json!({"version": version, "doi": doi}),
        )?;
        Ok(record)
    }
}
