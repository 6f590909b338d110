//! People, organisations, spaces, teams, collections, assets and classes.

use std::collections::BTreeSet;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use flowhub_core::model::{
    AccessPolicy, AssetId, CollectionId, CollectionItem, SpaceId, TeamId, TeamRole, UserId,
    WorkflowClass,
};
use flowhub_core::registry::{NewAsset, NewTeam, NewUser};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::auth::Actor;
use crate::error::ApiResult;
use crate::util::{blocking, json_body, path_id};
use crate::AppState;

pub fn routes() -> Router<AppState> {
    Router::new()
        .route("/people", get(people).post(create_person))
        .route("/people/{id}", get(person))
        .route(
            "/organisations",
            get(organisations).post(create_organisation),
        )
        .route("/spaces", get(spaces).post(create_space))
        .route("/spaces/{id}", get(space).delete(delete_space))
        .route("/spaces/{id}/admins", post(add_space_admin))
        .route("/teams", get(teams).post(create_team))
        .route(
            "/teams/{id}",
            get(team).patch(update_team).delete(delete_team),
        )
        .route("/teams/{id}/members", post(add_member))
        .route("/teams/{id}/members/{user}", delete(remove_member))
        .route("/collections", get(collections).post(create_collection))
        .route(
            "/collections/{id}",
            get(collection).delete(delete_collection),
        )
        .route(
            "/collections/{id}/items",
            post(add_item).delete(remove_item),
        )
        .route("/assets", post(create_asset))
        .route("/assets/{id}", get(asset).delete(delete_asset))
        .route("/classes", get(classes).post(register_class))
}

fn created(v: impl serde::Serialize) -> Response {
    (StatusCode::CREATED, Json(json!(v))).into_response()
}

async fn people(State(app): State<AppState>) -> Json<Value> {
    Json(json!(app.registry.users()))
}

/// Self-service sign-up. The first account becomes the registry operator.
async fn create_person(State(app): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let new: NewUser = json_body(&body)?;
    let reg = app.registry.clone();
    let user = blocking(move || Ok(reg.create_user(new)?)).await?;
    Ok(created(user))
}

async fn person(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id: UserId = path_id("user", &id)?;
    Ok(Json(json!(app.registry.user(id)?)))
}

async fn organisations(State(app): State<AppState>) -> Json<Value> {
    Json(json!(app.registry.organisations()))
}

#[derive(Deserialize)]
struct NewOrganisation {
    name: String,
    #[serde(default)]
    country: Option<String>,
}

async fn create_organisation(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let new: NewOrganisation = json_body(&body)?;
    Ok(created(app.registry.create_organisation(
        actor,
        &new.name,
        new.country,
    )?))
}

async fn spaces(State(app): State<AppState>) -> Json<Value> {
    Json(json!(app.registry.spaces()))
}

#[derive(Deserialize)]
struct Named {
    #[serde(alias = "title")]
    name: String,
    #[serde(default)]
    description: String,
}

async fn create_space(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let new: Named = json_body(&body)?;
    Ok(created(app.registry.create_space(
        actor,
        &new.name,
        &new.description,
    )?))
}

async fn space(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id: SpaceId = path_id("space", &id)?;
    Ok(Json(json!(app.registry.space(id)?)))
}

async fn delete_space(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let id: SpaceId = path_id("space", &id)?;
    app.registry.delete_space(actor, id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct UserRef {
    user_id: UserId,
    #[serde(default)]
    role: Option<TeamRole>,
}

async fn add_space_admin(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let id: SpaceId = path_id("space", &id)?;
    let r: UserRef = json_body(&body)?;
    Ok(Json(json!(app
        .registry
        .add_space_admin(actor, id, r.user_id)?)))
}

async fn teams(State(app): State<AppState>) -> Json<Value> {
    Json(json!(app.registry.teams()))
}

/// Teams created without a space land in the default space.
async fn create_team(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let mut new: NewTeam = json_body(&body)?;
    if new.space_id.is_none() {
        new.space_id = Some(app.registry.default_space().id);
    }
    Ok(created(app.registry.create_team(actor, new)?))
}

async fn team(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let id: TeamId = path_id("team", &id)?;
    Ok(Json(json!(app.registry.team(id)?)))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TeamDefaults {
    #[serde(default)]
    default_policy: Option<AccessPolicy>,
    #[serde(default)]
    default_license: Option<String>,
}

async fn update_team(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let id: TeamId = path_id("team", &id)?;
    let d: TeamDefaults = json_body(&body)?;
    Ok(Json(json!(app.registry.update_team_defaults(
        actor,
        id,
        d.default_policy,
        d.default_license
    )?)))
}

async fn delete_team(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let id: TeamId = path_id("team", &id)?;
    app.registry.delete_team(actor, id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn add_member(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let id: TeamId = path_id("team", &id)?;
    let r: UserRef = json_body(&body)?;
    let role = r.role.unwrap_or(TeamRole::Member);
    Ok(Json(json!(app
        .registry
        .add_member(actor, id, r.user_id, role)?)))
}

async fn remove_member(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path((id, user)): Path<(String, String)>,
) -> ApiResult<Json<Value>> {
    let id: TeamId = path_id("team", &id)?;
    let user: UserId = path_id("user", &user)?;
    Ok(Json(json!(app.registry.remove_member(actor, id, user)?)))
}

/// Workflow items the actor may not view are left out of the listing.
fn visible_collection(
    app: &AppState,
    actor: Option<UserId>,
    mut c: flowhub_core::model::Collection,
) -> flowhub_core::model::Collection {
    c.items.retain(|i| match i.entry_id() {
        Some(e) => app.registry.get_entry(actor, e).is_ok(),
        None => true,
    });
    c
}

async fn collections(State(app): State<AppState>, Actor(actor): Actor) -> Json<Value> {
    let all: Vec<_> = app
        .registry
        .collections()
        .into_iter()
        .map(|c| visible_collection(&app, actor, c))
        .collect();
    Json(json!(all))
}

#[derive(Deserialize)]
struct NewCollection {
    title: String,
    #[serde(default)]
    description: String,
    curator_team_ids: BTreeSet<TeamId>,
}

async fn create_collection(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let new: NewCollection = json_body(&body)?;
    Ok(created(app.registry.create_collection(
        actor,
        &new.title,
        &new.description,
        new.curator_team_ids,
    )?))
}

async fn collection(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let id: CollectionId = path_id("collection", &id)?;
    let c = app.registry.collection(id)?;
    Ok(Json(json!(visible_collection(&app, actor, c))))
}

async fn delete_collection(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let id: CollectionId = path_id("collection", &id)?;
    app.registry.delete_collection(actor, id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn add_item(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let id: CollectionId = path_id("collection", &id)?;
    let item: CollectionItem = json_body(&body)?;
    Ok(Json(json!(app
        .registry
        .add_collection_item(actor, id, item)?)))
}

async fn remove_item(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let id: CollectionId = path_id("collection", &id)?;
    let item: CollectionItem = json_body(&body)?;
    Ok(Json(json!(app
        .registry
        .remove_collection_item(actor, id, &item)?)))
}

async fn create_asset(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let new: NewAsset = json_body(&body)?;
    Ok(created(app.registry.create_asset(actor, new)?))
}

async fn asset(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<Json<Value>> {
    let id: AssetId = path_id("asset", &id)?;
    Ok(Json(json!(app.registry.get_asset(actor, id)?)))
}

async fn delete_asset(
    State(app): State<AppState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    let id: AssetId = path_id("asset", &id)?;
    app.registry.delete_asset(actor, id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn classes(State(app): State<AppState>) -> Json<Value> {
    let all: Vec<WorkflowClass> = app.registry.classes().iter().cloned().collect();
    Json(json!(all))
}

async fn register_class(
    State(app): State<AppState>,
    Actor(actor): Actor,
    body: Bytes,
) -> ApiResult<Response> {
    let class: WorkflowClass = json_body(&body)?;
    app.registry.register_class(actor, class.clone())?;
    Ok(created(class))
}
