//! JSON API over [`crate::service`]. Reads run concurrently; mutations
//! take the single writer lock so readers never see a half-applied change.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use concert_core::persist::DataStore;
use serde::Serialize;
use tokio::sync::RwLock;

use crate::error::ServiceError;
use crate::service::{self, ApplyRequest, EmailRequest, IngestRequest, PutFilter, PutTemplate, WindowQuery};

#[derive(Clone)]
pub struct AppState {
    store: DataStore,
    lock: Arc<RwLock<()>>,
}

impl AppState {
    pub fn new(store: DataStore) -> Self {
        Self {
            store,
            lock: Arc::new(RwLock::new(())),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<T, ServiceError>;

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(v)| v)
        .map_err(|e| ServiceError::bad_request("BadRequest", e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ServiceError::bad_request("BadRequest", e.body_text()))
}

/// 201 for a new name, 200 for a replaced one.
fn saved<T: Serialize>(value: T, created: bool) -> Response {
    let status = if created { StatusCode::CREATED } else { StatusCode::OK };
    (status, Json(value)).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/courses", get(courses))
        .route("/api/courses/{id}/overview", get(overview))
        .route("/api/courses/{id}/filters", get(list_filters))
        .route("/api/courses/{id}/filters/apply", post(apply))
        .route(
            "/api/courses/{id}/filters/{name}",
            get(get_filter).put(put_filter).delete(delete_filter),
        )
        .route("/api/courses/{id}/teams/{team_id}/detail", get(detail))
        .route("/api/courses/{id}/teams/{team_id}/email", post(email))
        .route("/api/courses/{id}/templates", get(list_templates))
        .route(
            "/api/courses/{id}/templates/{name}",
            get(get_template).put(put_template).delete(delete_template),
        )
        .route("/api/courses/{id}/ingest", post(ingest))
        .with_state(state)
}

async fn courses(State(s): State<AppState>) -> ApiResult<impl IntoResponse> {
    let _r = s.lock.read().await;
    Ok(Json(service::list_courses(&s.store)?))
}

async fn overview(
    State(s): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<WindowQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let q = query(q)?;
    let _r = s.lock.read().await;
    Ok(Json(service::overview(&s.store, &id, &q)?))
}

async fn apply(
    State(s): State<AppState>,
    Path(id): Path<String>,
    b: Result<Json<ApplyRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(b)?;
    let _r = s.lock.read().await;
    Ok(Json(service::apply(&s.store, &id, &req)?))
}

async fn list_filters(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let _r = s.lock.read().await;
    Ok(Json(service::list_filters(&s.store, &id)?))
}

async fn get_filter(State(s): State<AppState>, Path((id, name)): Path<(String, String)>) -> ApiResult<impl IntoResponse> {
    let _r = s.lock.read().await;
    Ok(Json(service::get_filter(&s.store, &id, &name)?))
}

async fn put_filter(
    State(s): State<AppState>,
    Path((id, name)): Path<(String, String)>,
    b: Result<Json<PutFilter>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(b)?;
    let _w = s.lock.write().await;
    let (f, created) = service::save_filter(&s.store, &id, &name, &req, Utc::now())?;
    Ok(saved(f, created))
}

async fn delete_filter(
    State(s): State<AppState>,
    Path((id, name)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    let _w = s.lock.write().await;
    Ok(Json(service::delete_filter(&s.store, &id, &name)?))
}

async fn detail(
    State(s): State<AppState>,
    Path((id, team)): Path<(String, String)>,
    q: Result<Query<WindowQuery>, QueryRejection>,
) -> ApiResult<impl IntoResponse> {
    let q = query(q)?;
    let _r = s.lock.read().await;
    Ok(Json(service::detail(&s.store, &id, &team, &q)?))
}

async fn email(
    State(s): State<AppState>,
    Path((id, team)): Path<(String, String)>,
    b: Result<Json<EmailRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(b)?;
    let _r = s.lock.read().await;
    Ok(Json(service::email(&s.store, &id, &team, &req)?))
}

async fn list_templates(State(s): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let _r = s.lock.read().await;
    Ok(Json(service::list_templates(&s.store, &id)?))
}

async fn get_template(
    State(s): State<AppState>,
    Path((id, name)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    let _r = s.lock.read().await;
    Ok(Json(service::get_template(&s.store, &id, &name)?))
}

async fn put_template(
    State(s): State<AppState>,
    Path((id, name)): Path<(String, String)>,
    b: Result<Json<PutTemplate>, JsonRejection>,
) -> ApiResult<Response> {
    let req = body(b)?;
    let _w = s.lock.write().await;
    let (t, created) = service::save_template(&s.store, &id, &name, &req)?;
    Ok(saved(t, created))
}

async fn delete_template(
    State(s): State<AppState>,
    Path((id, name)): Path<(String, String)>,
) -> ApiResult<impl IntoResponse> {
    let _w = s.lock.write().await;
    Ok(Json(service::delete_template(&s.store, &id, &name)?))
}

async fn ingest(
    State(s): State<AppState>,
    Path(id): Path<String>,
    b: Result<Json<IngestRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(b)?;
    let _w = s.lock.write().await;
    Ok(Json(service::ingest(&s.store, &id, &req)?))
}
