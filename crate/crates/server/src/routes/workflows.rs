//! Native JSON routes for workflow entries, search and notifications.

use std::collections::BTreeMap;

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use flowhub_core::model::{ClassId, EntryId, FileTree, TeamId};
use flowhub_core::registry::{
    ActivityKind, Facet, MetadataPatch, RegistrationRequest, RegistrationSource, SearchQuery,
};
use flowhub_core::Registry;
use serde::Deserialize;
use serde_json::{json, Value};

use super::{entry_view, landing};
use crate::auth::Actor;
use crate::error::{ApiError, ApiResult};
use crate::util::{blocking, json_body, path_id, Params};
use crate::AppState;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/auth/token", post(token))
        .route("/workflows", get(search).post(register))
        .route("/workflows/preview", post(preview))
        .route("/workflows/submit_crate", post(submit_crate))
        .route("/workflows/{id}", get(show).patch(update).delete(remove))
        .route("/workflows/{id}/versions", get(versions).post(new_version))
        .route("/workflows/{id}/versions/{v}", get(version))
        .route("/workflows/{id}/versions/{v}/freeze", post(freeze))
        .route("/workflows/{id}/versions/{v}/doi", post(mint_doi))
        .route(
            "/workflows/{id}/versions/{v}/files/{*path}",
            get(file).put(put_file).delete(delete_file),
        )
        .route("/workflows/{id}/ro_crate", get(ro_crate))
        .route(
            "/workflows/{id}/ro-crate-metadata.json",
            get(crate_metadata),
        )
        .route("/workflows/{id}/bioschemas", get(bioschemas))
        .route("/workflows/{id}/credit", get(credit))
        .route("/workflows/{id}/sync", post(sync))
        .route(
            "/workflows/{id}/subscribe",
            post(subscribe).delete(unsubscribe),
        )
        .route("/workflows/{id}/contact", post(contact))
        .route("/workflows/{id}/launch/{launcher}", get(launch))
        .route("/notifications", get(notifications))
        .route("/search", get(search))
}

/// A file in an upload body: plain text, or base64 for binary content.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FileContent {
    Text(String),
    Encoded { base64: String },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceBody {
    Upload {
        files: BTreeMap<String, FileContent>,
        #[serde(default)]
        main_path: Option<String>,
    },
    Git {
        remote: String,
        #[serde(default)]
        git_ref: Option<String>,
        #[serde(default)]
        main_path: Option<String>,
    },
    Crate {
        archive_base64: String,
    },
}

fn decode(what: &str, b64: &str) -> ApiResult<Vec<u8>> {
    BASE64
        .decode(b64.trim())
        .map_err(|e| ApiError::bad_request(format!("{what} is not valid base64: {e}")))
}

impl SourceBody {
    fn into_source(self) -> ApiResult<RegistrationSource> {
        Ok(match self {
            SourceBody::Upload { files, main_path } => {
                let mut tree = FileTree::new();
                for (path, content) in files {
                    let bytes = match content {
                        FileContent::Text(t) => t.into_bytes(),
                        FileContent::Encoded { base64 } => decode(&path, &base64)?,
                    };
                    tree.insert(path, bytes);
                }
                RegistrationSource::Upload {
                    files: tree,
                    main_path,
                }
            }
            SourceBody::Git {
                remote,
                git_ref,
                main_path,
            } => RegistrationSource::GitImport {
                remote,
                git_ref,
                main_path,
            },
            SourceBody::Crate { archive_base64 } => RegistrationSource::CrateImport {
                archive: decode("archive_base64", &archive_base64)?,
            },
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterBody {
    source: SourceBody,
    #[serde(default)]
    metadata: MetadataPatch,
    #[serde(default)]
    class: Option<String>,
    #[serde(default)]
    diagram_path: Option<String>,
    #[serde(default)]
    revision_comment: String,
}

/// Class ids are accepted by token or display name.
fn class_id(reg: &Registry, raw: &str) -> ClassId {
    reg.classes()
        .find_by_name(raw)
        .map(|c| c.id.clone())
        .unwrap_or_else(|| ClassId::new(raw))
}

impl RegisterBody {
    fn into_request(self, reg: &Registry) -> ApiResult<RegistrationRequest> {
        let mut req = RegistrationRequest::new(self.source.into_source()?, self.metadata);
        req.class = self.class.as_deref().map(|c| class_id(reg, c));
        req.diagram_path = self.diagram_path;
        req.revision_comment = self.revision_comment;
        Ok(req)
    }
}

fn wants(headers: &HeaderMap, media: &str) -> bool {
    headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|m| m.trim().starts_with(media)))
}

fn version_param(p: &Params) -> ApiResult<Option<u32>> {
    p.number("version")
}

#[derive(Deserialize)]
struct TokenBody {
    username: String,
    password: String,
}

async fn token(State(app): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let body: TokenBody = json_body(&body)?;
    let reg = app.registry.clone();
    let token = blocking(move || Ok(reg.authenticate(&body.username, &body.password)?)).await?;
    Ok(Json(json!({
        "token": token,
        "token_type": "Bearer",
        "expires_in": app.registry.config().token_ttl_secs,
    }))
    .into_response())
}

async fn register(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let body: RegisterBody = json_body(&body)?;
    let req = body.into_request(&app.registry)?;
    let reg = app.registry.clone();
    let done = blocking(move || Ok(reg.register_workflow(actor, req)?)).await?;
    let mut view = entry_view(&app.registry, actor, &done.entry)?;
    view["report"] = json!(done.report);
    view["notes"] = json!(done.notes);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn preview(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let body: RegisterBody = json_body(&body)?;
    let req = body.into_request(&app.registry)?;
    let reg = app.registry.clone();
    let draft = blocking(move || Ok(reg.preview_registration(actor, req)?)).await?;
    Ok(Json(draft).into_response())
}

/// Registers a workflow from a raw zip body. Query: `teams=1,2`,
/// optional `title` and `class`.
async fn submit_crate(
    State(app): State<AppState>,
    Actor(actor): Actor,
    RawQuery(q): RawQuery,
    body: Bytes,
) -> ApiResult<Response> {
    let p = Params::parse(q.as_deref());
    if body.is_empty() {
        return Err(ApiError::bad_request(
            "the request body must be a crate zip",
        ));
    }
    let mut patch = MetadataPatch::default();
    if let Some(teams) = p.get("teams") {
        let ids = teams
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.parse::<TeamId>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| {
                ApiError::new(
                    StatusCode::BAD_REQUEST,
                    "bad_query",
                    "`teams` must list team ids",
                )
            })?;
        patch = patch.teams(ids);
    }
    if let Some(title) = p.get("title") {
        patch = patch.title(title);
    }
    let mut req = RegistrationRequest::new(
        RegistrationSource::CrateImport {
            archive: body.to_vec(),
        },
        patch,
    );
    req.class = p.get("class").map(|c| class_id(&app.registry, c));
    let reg = app.registry.clone();
    let done = blocking(move || Ok(reg.register_workflow(actor, req)?)).await?;
    let mut view = entry_view(&app.registry, actor, &done.entry)?;
    view["report"] = json!(done.report);
    view["notes"] = json!(done.notes);
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

/// Entry by id. Browsers get the landing page, JSON-LD clients the
/// Bioschemas document, everyone else the JSON entry. All count as a view.
async fn show(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    RawQuery(q): RawQuery,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let id: EntryId = path_id("workflow", &id)?;
    let version = version_param(&Params::parse(q.as_deref()))?;
    if wants(&headers, "text/html") {
        return landing::page(&app.registry, actor, id, version);
    }
    let reg = &app.registry;
    if wants(&headers, "application/ld+json") {
        let (e, v) = reg.get_version(actor, id, version)?;
        let doc = reg.bioschemas(actor, id, Some(v.version))?;
        reg.record_activity(id, ActivityKind::View)?;
        let links = landing::signposting_links(reg.base_url(), &e, &v);
        return Ok((
            [
                (header::CONTENT_TYPE, "application/ld+json".to_string()),
                (header::LINK, links),
            ],
            doc.to_string(),
        )
            .into_response());
    }
    let mut e = reg.get_entry(actor, id)?;
    e.metrics = reg.record_activity(id, ActivityKind::View)?;
    let links = e
        .latest_version()
        .map(|v| landing::signposting_links(reg.base_url(), &e, v));
    let body = Json(entry_view(reg, actor, &e)?);
    Ok(match links {
        Some(l) => ([(header::LINK, l)], body).into_response(),
        None => body.into_response(),
    })
}

async fn update(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let id: EntryId = path_id("workflow", &id)?;
    let patch: MetadataPatch = json_body(&body)?;
    let e = app.registry.update_metadata(actor, id, &patch)?;
    Ok(Json(entry_view(&app.registry, actor, &e)?))
}

async fn remove(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let id: EntryId = path_id("workflow", &id)?;
    app.registry.delete_entry(actor, id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn versions(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let id: EntryId = path_id("workflow", &id)?;
    let e = app.registry.get_entry(actor, id)?;
    Ok(Json(json!(e.versions)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VersionBody {
    source: SourceBody,
    #[serde(default)]
    revision_comment: String,
}

async fn new_version(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let id: EntryId = path_id("workflow", &id)?;
    let body: VersionBody = json_body(&body)?;
    let source = body.source.into_source()?;
    let reg = app.registry.clone();
    let v =
        blocking(move || Ok(reg.add_version(actor, id, source, &body.revision_comment)?)).await?;
    Ok((StatusCode::CREATED, Json(v)).into_response())
}

fn version_path(id: &str, v: &str) -> ApiResult<(EntryId, u32)> {
    Ok((path_id("workflow", id)?, path_id("version", v)?))
}

async fn version(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    let (id, v) = version_path(&id, &v)?;
    let (e, ver) = app.registry.get_version(actor, id, Some(v))?;
    let mut body = json!(ver);
    body["doi"] = json!(e.doi_records.get(&v));
    Ok(Json(body))
}

async fn freeze(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    let (id, v) = version_path(&id, &v)?;
    Ok(Json(json!(app.registry.freeze_version(actor, id, v)?)))
}

/// 201 when a DOI is minted, 200 when the version already had one.
async fn mint_doi(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v)): Path<(String, String)>,
) -> ApiResult<Response> {
    let (id, v) = version_path(&id, &v)?;
    let existed = app
        .registry
        .get_entry(actor, id)
        .map(|e| e.doi_records.contains_key(&v))
        .unwrap_or(false);
    let reg = app.registry.clone();
    let record = blocking(move || Ok(reg.mint_doi(actor, id, v)?)).await?;
    let status = if existed {
        StatusCode::OK
    } else {
        StatusCode::CREATED
    };
    Ok((status, Json(record)).into_response())
}

async fn file(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v, path)): Path<(String, String, String)>,
) -> ApiResult<Response> {
    let (id, v) = version_path(&id, &v)?;
    let (_, ver) = app.registry.version_contents(actor, id, Some(v))?;
    let blob = ver
        .files
        .get(&path)
        .ok_or_else(|| ApiError::not_found(format!("file {path} not found")))?;
    Ok((
        [(header::CONTENT_TYPE, blob.media_type().to_string())],
        blob.bytes().to_vec(),
    )
        .into_response())
}

async fn put_file(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v, path)): Path<(String, String, String)>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let (id, v) = version_path(&id, &v)?;
    Ok(Json(json!(app.registry.put_file(
        actor,
        id,
        v,
        &path,
        body.to_vec()
    )?)))
}

async fn delete_file(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, v, path)): Path<(String, String, String)>,
) -> ApiResult<Json<Value>> {
    let (id, v) = version_path(&id, &v)?;
    Ok(Json(json!(app
        .registry
        .remove_file(actor, id, v, &path)?)))
}

/// The crate zip, exactly as the registry builds it. Counts as a download.
async fn ro_crate(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    RawQuery(q): RawQuery,
) -> ApiResult<Response> {
    let id: EntryId = path_id("workflow", &id)?;
    let version = version_param(&Params::parse(q.as_deref()))?;
    let reg = app.registry.clone();
    let built = blocking(move || Ok(reg.entry_crate(actor, id, version)?)).await?;
    let version = version
        .map(|v| v.to_string())
        .unwrap_or_else(|| "latest".into());
    Ok((
        [
            (header::CONTENT_TYPE, "application/zip".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"workflow-{id}-{version}.crate.zip\""),
            ),
        ],
        built.archive,
    )
        .into_response())
}

fn ld_json(doc: Value) -> Response {
    (
        [(header::CONTENT_TYPE, "application/ld+json")],
        doc.to_string(),
    )
        .into_response()
}

async fn crate_metadata(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    RawQuery(q): RawQuery,
) -> ApiResult<Response> {
    let id: EntryId = path_id("workflow", &id)?;
    let version = version_param(&Params::parse(q.as_deref()))?;
    Ok(ld_json(app.registry.crate_metadata(actor, id, version)?))
}

async fn bioschemas(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    RawQuery(q): RawQuery,
) -> ApiResult<Response> {
    let id: EntryId = path_id("workflow", &id)?;
    let version = version_param(&Params::parse(q.as_deref()))?;
    Ok(ld_json(app.registry.bioschemas(actor, id, version)?))
}

async fn credit(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let id: EntryId = path_id("workflow", &id)?;
    Ok(Json(json!(app.registry.credit(actor, id)?)))
}

/// Imports Git releases not yet registered as versions.
async fn sync(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let id: EntryId = path_id("workflow", &id)?;
    let reg = app.registry.clone();
    let added = blocking(move || Ok(reg.sync_git(actor, id)?)).await?;
    Ok(Json(json!(added)))
}

async fn subscribe(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let id: EntryId = path_id("workflow", &id)?;
    app.registry.subscribe(actor, id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn unsubscribe(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let id: EntryId = path_id("workflow", &id)?;
    app.registry.unsubscribe(actor, id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct ContactBody {
    message: String,
}

async fn contact(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<StatusCode> {
    let id: EntryId = path_id("workflow", &id)?;
    let body: ContactBody = json_body(&body)?;
    app.registry.request_contact(actor, id, &body.message)?;
    Ok(StatusCode::ACCEPTED)
}

/// Redirects to a configured launcher, pointed at this registry's TRS
/// endpoint. Launchers that cannot run the entry's class do not exist here.
async fn launch(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, launcher)): Path<(String, String)>,
    RawQuery(q): RawQuery,
) -> ApiResult<Response> {
    let id: EntryId = path_id("workflow", &id)?;
    let version = version_param(&Params::parse(q.as_deref()))?;
    let reg = &app.registry;
    let (e, v) = reg.get_version(actor, id, version)?;
    let cfg = reg.config();
    let l = cfg
        .launchers
        .get(&launcher)
        .filter(|l| l.supports(&e.workflow_class))
        .ok_or_else(|| ApiError::not_found(format!("launcher {launcher} not found")))?;
    let target = l.expand(&cfg.trs_base(), id, v.version);
    Ok((StatusCode::FOUND, [(header::LOCATION, target)]).into_response())
}

async fn notifications(State(app): State<AppState>, Actor(actor): Actor) -> ApiResult<Json<Value>> {
    Ok(Json(json!(app.registry.notifications(actor)?)))
}

/// Builds a search from query parameters: `q`, `page`, `page_size`, `sort`,
/// `order`, and any facet name as a filter key (repeatable). `facet=k=v`
/// is accepted as well.
pub fn search_query(p: &Params) -> ApiResult<SearchQuery> {
    let mut q = SearchQuery::default();
    for (k, v) in &p.0 {
        match k.as_str() {
            "q" => q.text = Some(v.clone()).filter(|t| !t.trim().is_empty()),
            "page" | "page_size" => {}
            "sort" => q.sort = v.parse()?,
            "order" => q.order = v.parse()?,
            "facet" => {
                let (f, val) = v.split_once('=').ok_or_else(|| {
                    ApiError::new(
                        StatusCode::BAD_REQUEST,
                        "bad_query",
                        "`facet` takes `name=value`",
                    )
                })?;
                q.filters
                    .entry(f.parse::<Facet>()?)
                    .or_default()
                    .insert(val.to_string());
            }
            other => {
                q.filters
                    .entry(other.parse::<Facet>()?)
                    .or_default()
                    .insert(v.clone());
            }
        }
    }
    if let Some(page) = p.number("page")? {
        q.page = page;
    }
    if let Some(size) = p.number("page_size")? {
        q.page_size = size;
    }
    Ok(q)
}

async fn search(
    State(app): State<AppState>,
    Actor(actor): Actor,
    RawQuery(q): RawQuery,
) -> ApiResult<Json<Value>> {
    let query = search_query(&Params::parse(q.as_deref()))?;
    Ok(Json(json!(app.registry.search(actor, &query)?)))
}
