pub mod directory;
pub mod landing;
pub mod trs;
pub mod workflows;

use chrono::Datelike;
use flowhub_core::config::trs_tool_id;
use flowhub_core::model::{EntryId, WorkflowEntry};
use flowhub_core::registry::DOI_PUBLISHER;
use flowhub_core::Registry;
use serde_json::{json, Value};

use crate::error::ApiResult;

pub(crate) fn canonical_url(base: &str, id: EntryId) -> String {
    format!("{}/workflows/{id}", base.trim_end_matches('/'))
}

/// Citation text for an entry: its DOI when one was minted (latest version
/// first), else the custom citation, else the canonical URL.
pub fn citation_text(base: &str, e: &WorkflowEntry) -> String {
    let authors = if e.creators.is_empty() {
        "Anonymous".to_string()
    } else {
        e.creators
            .iter()
            .map(|c| c.name.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let doi = e
        .latest_version()
        .and_then(|v| e.doi_records.get(&v.version))
        .or_else(|| e.doi_records.values().next_back());
    if let Some(rec) = doi {
        return format!(
            "{authors} ({}). {}. {DOI_PUBLISHER}. {}",
            rec.minted_at.year(),
            e.title,
            rec.iri()
        );
    }
    if let Some(c) = e
        .custom_citation
        .as_deref()
        .filter(|c| !c.trim().is_empty())
    {
        return c.to_string();
    }
    format!(
        "{authors}. {}. {DOI_PUBLISHER}. {}",
        e.title,
        canonical_url(base, e.id)
    )
}

/// Launchers able to run the entry's class, pointing at the latest version.
pub fn launch_options(reg: &Registry, e: &WorkflowEntry) -> Vec<Value> {
    let Some(latest) = e.latest_version() else {
        return Vec::new();
    };
    let cfg = reg.config();
    let trs_base = cfg.trs_base();
    cfg.launchers
        .iter()
        .filter(|(_, l)| l.supports(&e.workflow_class))
        .map(|(key, l)| {
            json!({
                "id": key,
                "name": l.name,
                "url": format!("{}/launch/{key}?version={}", canonical_url(reg.base_url(), e.id), latest.version),
                "target": l.expand(&trs_base, e.id, latest.version),
            })
        })
        .collect()
}

/// The JSON body of an entry as the API returns it: the stored entry plus
/// what the caller may do with it and where it is referenced from.
pub(crate) fn entry_view(
    reg: &Registry,
    actor: Option<flowhub_core::model::UserId>,
    e: &WorkflowEntry,
) -> ApiResult<Value> {
    let mut v = serde_json::to_value(e).map_err(|err| {
        crate::ApiError::new(
            axum::http::StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            err.to_string(),
        )
    })?;
    v["url"] = json!(canonical_url(reg.base_url(), e.id));
    v["trs_id"] = json!(trs_tool_id(e.id));
    v["rights"] = json!(reg.rights(actor, e.id)?);
    v["citation"] = json!(citation_text(reg.base_url(), e));
    v["collections"] = json!(reg.collections_containing(e.id));
    v["derived"] = json!(reg.derived_entries(actor, e.id)?);
    let launch = launch_options(reg, e);
    if !launch.is_empty() {
        v["launch"] = Value::Array(launch);
    }
    Ok(v)
}
