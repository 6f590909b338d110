//! Read-only GA4GH Tool Registry Service v2.
//!
//! Every entry is a tool of class `Workflow` with id `#workflow/<entry>`;
//! its versions are the entry's versions. Paths carry the id URL-encoded
//! (`%23workflow%2F1`); a bare entry number is accepted as well.

use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use flowhub_core::config::trs_tool_id;
use flowhub_core::model::{sha256_hex, EntryId, UserId, WorkflowEntry, WorkflowVersion};
use flowhub_core::parsers::detect_class;
use flowhub_core::Registry;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde_json::{json, Value};

use super::canonical_url;
use crate::auth::Actor;
use crate::error::{ApiError, ApiResult};
use crate::util::Params;
use crate::AppState;

pub const TRS_VERSION: &str = "2.0.1";
const DEFAULT_LIMIT: usize = 1000;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/service-info", get(service_info))
        .route("/toolClasses", get(tool_classes))
        .route("/tools", get(tools))
        .route("/tools/{id}", get(tool))
        .route("/tools/{id}/versions", get(versions))
        .route("/tools/{id}/versions/{v}", get(version))
        .route(
            "/tools/{id}/versions/{v}/{type}/descriptor",
            get(descriptor),
        )
        .route(
            "/tools/{id}/versions/{v}/{type}/descriptor/{*path}",
            get(descriptor_path),
        )
        .route("/tools/{id}/versions/{v}/{type}/files", get(files))
}

pub fn tool_class() -> Value {
    json!({
        "id": "workflow",
        "name": "Workflow",
        "description": "A computational workflow",
    })
}

fn service_info_doc(reg: &Registry) -> Value {
    json!({
        "id": "org.flowhub.trs",
        "name": "FlowHub Tool Registry Service",
        "type": {"group": "org.ga4gh", "artifact": "trs", "version": TRS_VERSION},
        "description": "Read-only GA4GH TRS view of the workflows registered in FlowHub",
        "organization": {"name": "FlowHub", "url": reg.base_url()},
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn not_found(what: impl std::fmt::Display) -> ApiError {
    ApiError::not_found(format!("{what} not found"))
}

/// Accepts `#workflow/N` (already URL-decoded by the router), `workflow/N`
/// and `N`.
fn parse_tool_id(raw: &str) -> ApiResult<EntryId> {
    let bare = raw
        .strip_prefix('#')
        .unwrap_or(raw)
        .strip_prefix("workflow/")
        .unwrap_or(raw.trim_start_matches('#'));
    bare.parse()
        .map_err(|_| not_found(format_args!("tool {raw}")))
}

fn tool_url(reg: &Registry, id: EntryId) -> String {
    format!(
        "{}/tools/{}",
        reg.config().trs_base(),
        utf8_percent_encode(&trs_tool_id(id), NON_ALPHANUMERIC)
    )
}

fn organization(reg: &Registry, e: &WorkflowEntry) -> String {
    e.team_ids
        .iter()
        .filter_map(|t| reg.team(*t).ok())
        .map(|t| t.name)
        .collect::<Vec<_>>()
        .join(", ")
}

fn version_view(reg: &Registry, e: &WorkflowEntry, v: &WorkflowVersion) -> Value {
    let url = format!("{}/versions/{}", tool_url(reg, e.id), v.version);
    json!({
        "id": v.version.to_string(),
        "name": if v.revision_comment.is_empty() { format!("v{}", v.version) } else { v.revision_comment.clone() },
        "url": url,
        "author": e.creators.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
        "descriptor_type": [reg.classes().descriptor_type(&e.workflow_class)],
        "is_production": v.frozen,
        "signed": false,
        "verified": false,
        "verified_source": [],
        "containerfile": false,
        "images": [],
        "included_apps": [],
    })
}

pub fn tool_view(reg: &Registry, e: &WorkflowEntry) -> Value {
    json!({
        "id": trs_tool_id(e.id),
        "url": tool_url(reg, e.id),
        "name": e.title,
        "description": e.description,
        "organization": organization(reg, e),
        "toolclass": tool_class(),
        "aliases": e.doi_records.values().map(|r| r.iri()).collect::<Vec<_>>(),
        "has_checker": false,
        "checker_url": "",
        "meta_version": e.updated_at.to_rfc3339(),
        "versions": e.versions.iter().map(|v| version_view(reg, e, v)).collect::<Vec<_>>(),
    })
}

async fn service_info(State(app): State<AppState>) -> Json<Value> {
    Json(service_info_doc(&app.registry))
}

async fn tool_classes() -> Json<Value> {
    Json(json!([tool_class()]))
}

fn contains_ci(haystack: &str, needle: &str) -> bool {
    haystack.to_lowercase().contains(&needle.to_lowercase())
}

/// Tools the actor may view, filtered by TRS query parameters and paged
/// with `offset`/`limit`.
async fn tools(
    State(app): State<AppState>,
    Actor(actor): Actor,
    RawQuery(q): RawQuery,
) -> ApiResult<Response> {
    let reg = &app.registry;
    let p = Params::parse(q.as_deref());
    let offset: usize = p.number("offset")?.unwrap_or(0);
    let limit: usize = p.number("limit")?.unwrap_or(DEFAULT_LIMIT).max(1);

    let mut entries = reg.visible_entries(actor)?;
    entries.sort_by_key(|e| e.id);
    let classes = reg.classes();
    let matching: Vec<&WorkflowEntry> = entries
        .iter()
        .filter(|e| {
            p.get("id")
                .is_none_or(|id| parse_tool_id(id).is_ok_and(|n| n == e.id))
                && p.get("toolname").is_none_or(|n| contains_ci(&e.title, n))
                && p.get("name").is_none_or(|n| contains_ci(&e.title, n))
                && p.get("description")
                    .is_none_or(|d| contains_ci(&e.description, d))
                && p.get("toolClass")
                    .is_none_or(|c| c.eq_ignore_ascii_case("workflow"))
                && p.get("descriptorType").is_none_or(|t| {
                    classes
                        .descriptor_type(&e.workflow_class)
                        .eq_ignore_ascii_case(t)
                })
                && p.get("organization")
                    .is_none_or(|o| contains_ci(&organization(reg, e), o))
                && p.get("author")
                    .is_none_or(|a| e.creators.iter().any(|c| contains_ci(&c.name, a)))
        })
        .collect();
    drop(classes);

    let total = matching.len();
    let page: Vec<Value> = matching
        .iter()
        .skip(offset)
        .take(limit)
        .map(|e| tool_view(reg, e))
        .collect();

    let base = format!("{}/tools", reg.config().trs_base());
    let link = |off: usize| format!("{base}?offset={off}&limit={limit}");
    let last_offset = if total == 0 {
        0
    } else {
        (total - 1) / limit * limit
    };
    let mut headers = HeaderMap::new();
    let mut set = |name: &'static str, value: String| {
        if let Ok(v) = HeaderValue::from_str(&value) {
            headers.insert(HeaderName::from_static(name), v);
        }
    };
    set("self_link", link(offset));
    set("last_page", link(last_offset));
    if offset + limit < total {
        set("next_page", link(offset + limit));
    }
    set("current_offset", offset.to_string());
    set("current_limit", limit.to_string());
    set("x-total-count", total.to_string());
    Ok((headers, Json(Value::Array(page))).into_response())
}

fn entry_for(reg: &Registry, actor: Option<UserId>, raw: &str) -> ApiResult<WorkflowEntry> {
    let id = parse_tool_id(raw)?;
    Ok(reg.get_entry(actor, id)?)
}

async fn tool(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let e = entry_for(&app.registry, actor, &id)?;
    Ok(Json(tool_view(&app.registry, &e)))
}

async fn versions(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let reg = &app.registry;
    let e = entry_for(reg, actor, &id)?;
    Ok(Json(json!(e
        .versions
        .iter()
        .map(|v| version_view(reg, &e, v))
        .collect::<Vec<_>>())))
}

fn parse_version(raw: &str) -> ApiResult<u32> {
    raw.trim_start_matches('v')
        .parse()
        .map_err(|_| not_found(format_args!("version {raw}")))
}

async fn version(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    let reg = &app.registry;
    let e = entry_for(reg, actor, &id)?;
    let n = parse_version(&v)?;
    let ver = e
        .version(n)
        .ok_or_else(|| not_found(format_args!("version {v}")))?;
    Ok(Json(version_view(reg, &e, ver)))
}

/// Resolves `{type}` against the entry's descriptor type. `PLAIN_<type>`
/// asks for the raw file instead of the JSON wrapper.
fn check_type(reg: &Registry, e: &WorkflowEntry, requested: &str) -> ApiResult<bool> {
    let native = reg.classes().descriptor_type(&e.workflow_class);
    if requested.eq_ignore_ascii_case(&native) {
        return Ok(false);
    }
    match requested.get(..6) {
        Some(p)
            if p.eq_ignore_ascii_case("PLAIN_") && requested[6..].eq_ignore_ascii_case(&native) =>
        {
            Ok(true)
        }
        _ => Err(not_found(format_args!(
            "descriptor type {requested} for tool {}",
            trs_tool_id(e.id)
        ))),
    }
}

fn wants_plain(headers: &HeaderMap) -> bool {
    headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|m| m.trim().starts_with("text/plain")))
}

fn serve_file(
    reg: &Registry,
    actor: Option<UserId>,
    raw_id: &str,
    raw_version: &str,
    ty: &str,
    path: Option<&str>,
    headers: &HeaderMap,
) -> ApiResult<Response> {
    let id = parse_tool_id(raw_id)?;
    let n = parse_version(raw_version)?;
    let e = reg.get_entry(actor, id)?;
    let plain = check_type(reg, &e, ty)? || wants_plain(headers);
    let (_, v) = reg.version_contents(actor, id, Some(n))?;
    let path = path.unwrap_or(&v.main_workflow_path).to_string();
    let bytes = v
        .files
        .bytes(&path)
        .ok_or_else(|| not_found(format_args!("file {path}")))?;
    if plain {
        return Ok((
            StatusCode::OK,
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            bytes.to_vec(),
        )
            .into_response());
    }
    let url = format!(
        "{}/versions/{}/files/{path}",
        canonical_url(reg.base_url(), id),
        v.version
    );
    Ok(Json(json!({
        "content": String::from_utf8_lossy(bytes),
        "url": url,
        "checksum": [{"checksum": sha256_hex(bytes), "type": "sha-256"}],
    }))
    .into_response())
}

async fn descriptor(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v, ty)): Path<(String, String, String)>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    serve_file(&app.registry, actor, &id, &v, &ty, None, &headers)
}

async fn descriptor_path(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v, ty, path)): Path<(String, String, String, String)>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    serve_file(&app.registry, actor, &id, &v, &ty, Some(&path), &headers)
}

/// TRS file type of a path within a version.
pub fn file_type(
    reg: &Registry,
    v: &WorkflowVersion,
    e: &WorkflowEntry,
    path: &str,
) -> &'static str {
    if path == v.main_workflow_path {
        return "PRIMARY_DESCRIPTOR";
    }
    let lower = path.to_lowercase();
    if lower.split('/').any(|seg| seg.contains("test")) {
        return "TEST_FILE";
    }
    let content = v.files.bytes(path).unwrap_or_default();
    let same_class =
        detect_class(&reg.classes(), path, content).is_ok_and(|c| c == e.workflow_class);
    if same_class {
        "SECONDARY_DESCRIPTOR"
    } else {
        "OTHER"
    }
}

async fn files(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v, ty)): Path<(String, String, String)>,
) -> ApiResult<Json<Value>> {
    let reg = &app.registry;
    let e = entry_for(reg, actor, &id)?;
    check_type(reg, &e, &ty)?;
    let n = parse_version(&v)?;
    let ver = e
        .version(n)
        .ok_or_else(|| not_found(format_args!("version {v}")))?;
    Ok(Json(json!(ver
        .files
        .paths()
        .map(|p| json!({"path": p, "file_type": file_type(reg, ver, &e, p)}))
        .collect::<Vec<_>>())))
}
