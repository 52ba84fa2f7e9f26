//! HTTP routes of the trial service.
//!
//! | Method | Path                          | Body                                  |
//! |--------|-------------------------------|---------------------------------------|
//! | POST   | `/sessions`                   | demographics                          |
//! | GET    | `/sessions/{id}/elicitation`  |                                       |
//! | POST   | `/sessions/{id}/profile`      | `{"items": [..10 ids]}`               |
//! | GET    | `/sessions/{id}/comparison`   |                                       |
//! | POST   | `/sessions/{id}/responses`    | `{"responses": [{"question", "answer"}]}` |
//! | GET    | `/questions`                  |                                       |
//! | GET    | `/export`                     | `?format=csv` for the raw rows        |
//!
//! Errors are `{"error": message, "fields": [..]}` with status 400 (bad
//! payload), 404 (unknown session), 409 (wrong session state) or 500.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use super::store::DemographicsRecord;
use super::{ResponseInput, Trial, TrialError};

impl IntoResponse for TrialError {
    fn into_response(self) -> Response {
        let (status, fields) = match &self {
            TrialError::NotFound(_) => (StatusCode::NOT_FOUND, Vec::new()),
            TrialError::Invalid { fields, .. } => (StatusCode::BAD_REQUEST, fields.clone()),
            TrialError::Conflict(_) => (StatusCode::CONFLICT, Vec::new()),
            TrialError::Internal(m) => {
                log::error!("trial: {m}");
                (StatusCode::INTERNAL_SERVER_ERROR, Vec::new())
            }
        };
        (status, Json(serde_json::json!({ "error": self.to_string(), "fields": fields }))).into_response()
    }
}

#[derive(Serialize, Deserialize)]
pub struct SessionCreated {
    pub session: String,
    pub state: String,
}

#[derive(Serialize, Deserialize)]
pub struct ProfileBody {
    pub items: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct ResponsesBody {
    pub responses: Vec<ResponseInput>,
}

#[derive(Deserialize)]
pub struct ExportQuery {
    pub format: Option<String>,
}

type Shared = Arc<Trial>;

async fn blocking<T, F>(f: F) -> Result<T, TrialError>
where
    F: FnOnce() -> Result<T, TrialError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| TrialError::Internal(e.to_string()))?
}

async fn create(State(t): State<Shared>, Json(d): Json<DemographicsRecord>) -> Result<impl IntoResponse, TrialError> {
    let id = blocking(move || t.create_session(d)).await?;
    Ok((StatusCode::CREATED, Json(SessionCreated { session: id, state: "created".into() })))
}

async fn elicitation(State(t): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, TrialError> {
    let items = t.elicitation(&id)?;
    Ok(Json(serde_json::json!({ "session": id, "items": items })))
}

async fn profile(
    State(t): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<ProfileBody>,
) -> Result<impl IntoResponse, TrialError> {
    let view = blocking(move || t.submit_profile(&id, body.items)).await?;
    Ok(Json(view))
}

async fn comparison(State(t): State<Shared>, Path(id): Path<String>) -> Result<impl IntoResponse, TrialError> {
    Ok(Json(t.comparison(&id)?))
}

async fn responses(
    State(t): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<ResponsesBody>,
) -> Result<impl IntoResponse, TrialError> {
    let session = id.clone();
    let state = blocking(move || t.submit_responses(&id, &body.responses)).await?;
    Ok(Json(SessionCreated { session, state: state.as_str().into() }))
}

async fn questions(State(t): State<Shared>) -> impl IntoResponse {
    Json(t.questions().to_vec())
}

async fn export(State(t): State<Shared>, Query(q): Query<ExportQuery>) -> Result<Response, TrialError> {
    let e = t.export()?;
    Ok(match q.format.as_deref() {
        Some("csv") => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], e.to_csv()).into_response(),
        _ => Json(e).into_response(),
    })
}

pub fn router(trial: Arc<Trial>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/elicitation", get(elicitation))
        .route("/sessions/{id}/profile", post(profile))
        .route("/sessions/{id}/comparison", get(comparison))
        .route("/sessions/{id}/responses", post(responses))
        .route("/questions", get(questions))
        .route("/export", get(export))
        .with_state(trial)
}

/// Serves until Ctrl-C.
pub async fn serve(trial: Arc<Trial>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("trial service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(trial))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
