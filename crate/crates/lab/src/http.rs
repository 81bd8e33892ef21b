//! JSON-over-HTTP front end for [`LabService`].

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::record::StepPayload;
use crate::service::{CreateSession, LabService};
use crate::{LabError, SCHEMA_VERSION};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema_version: u32,
    pub error: String,
    pub message: String,
}

#[derive(Debug, Deserialize)]
struct AbortRequest {
    #[serde(default)]
    reason: Option<String>,
}

struct ApiError(LabError);

impl From<LabError> for ApiError {
    fn from(e: LabError) -> Self {
        ApiError(e)
    }
}

fn status_of(e: &LabError) -> StatusCode {
    match e {
        LabError::UnknownSession(_) | LabError::UnknownCondition(_) => StatusCode::NOT_FOUND,
        LabError::DuplicateSession(_) | LabError::OutOfOrder { .. } => StatusCode::CONFLICT,
        LabError::SessionClosed(_) | LabError::NotFinished => StatusCode::CONFLICT,
        LabError::WrongCondition { .. } => StatusCode::FORBIDDEN,
        LabError::ConsentRequired | LabError::Malformed(_) | LabError::Protocol(_) => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        LabError::BadRange(_) => StatusCode::RANGE_NOT_SATISFIABLE,
        LabError::MissingConditions { .. } => StatusCode::SERVICE_UNAVAILABLE,
        LabError::Io { .. } | LabError::Corrupt { .. } | LabError::Json(_) => {
            StatusCode::INTERNAL_SERVER_ERROR
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_of(&self.0);
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        let body = ErrorBody {
            schema_version: SCHEMA_VERSION,
            error: self.0.code().to_string(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Run blocking service work (file IO, fsync) off the async executor.
async fn blocking<T, F>(svc: &Arc<LabService>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&LabService) -> Result<T, LabError> + Send + 'static,
{
    let svc = Arc::clone(svc);
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| {
            ApiError(LabError::Io {
                path: String::new(),
                source: std::io::Error::other(e.to_string()),
            })
        })?
        .map_err(ApiError)
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError(LabError::Malformed(e.to_string())))
}

async fn create(
    State(svc): State<Arc<LabService>>,
    body: axum::body::Bytes,
) -> ApiResult<Response> {
    let req: CreateSession = parse_json(&body)?;
    let created = blocking(&svc, move |s| s.create_session(&req)).await?;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn next(State(svc): State<Arc<LabService>>, Path(id): Path<String>) -> ApiResult<Response> {
    let d = blocking(&svc, move |s| s.next_step(&id)).await?;
    Ok(Json(d).into_response())
}

async fn submit(
    State(svc): State<Arc<LabService>>,
    Path((id, step)): Path<(String, u64)>,
    body: axum::body::Bytes,
) -> ApiResult<Response> {
    let payload: StepPayload = parse_json(&body)?;
    let ack = blocking(&svc, move |s| s.submit_step(&id, step, payload)).await?;
    Ok(Json(ack).into_response())
}

async fn stimulus(
    State(svc): State<Arc<LabService>>,
    Path((id, condition)): Path<(String, String)>,
    headers: HeaderMap,
) -> ApiResult<Response> {
    let range = match headers.get(header::RANGE) {
        Some(v) => Some(
            v.to_str()
                .map_err(|_| ApiError(LabError::BadRange("non-ascii range".into())))?
                .to_string(),
        ),
        None => None,
    };
    let slice = blocking(&svc, move |s| s.stimulus(&id, &condition, range.as_deref())).await?;
    let mut resp = Response::new(axum::body::Body::from(slice.bytes));
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("audio/wav"));
    h.insert(header::ACCEPT_RANGES, HeaderValue::from_static("bytes"));
    h.insert(
        "x-content-sha256",
        HeaderValue::from_str(&slice.sha256).expect("hex is a valid header"),
    );
    if slice.partial {
        *resp.status_mut() = StatusCode::PARTIAL_CONTENT;
        let cr = format!("bytes {}-{}/{}", slice.start, slice.end - 1, slice.total);
        resp.headers_mut().insert(
            header::CONTENT_RANGE,
            HeaderValue::from_str(&cr).expect("ascii"),
        );
    }
    Ok(resp)
}

async fn export(State(svc): State<Arc<LabService>>, Path(id): Path<String>) -> ApiResult<Response> {
    let b = blocking(&svc, move |s| s.export_session(&id)).await?;
    Ok(Json(b).into_response())
}

async fn abort(
    State(svc): State<Arc<LabService>>,
    Path(id): Path<String>,
    body: axum::body::Bytes,
) -> ApiResult<Response> {
    let req: AbortRequest = if body.is_empty() {
        AbortRequest { reason: None }
    } else {
        parse_json(&body)?
    };
    let reason = req.reason.unwrap_or_else(|| "aborted by operator".into());
    let rec = blocking(&svc, move |s| s.abort(&id, &reason)).await?;
    Ok(Json(serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "session_id": rec.session_id,
        "status": rec.status,
    }))
    .into_response())
}

pub fn router(service: Arc<LabService>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/steps/{step}", post(submit))
        .route("/sessions/{id}/stimuli/{condition}", get(stimulus))
        .route("/sessions/{id}/export", get(export))
        .route("/sessions/{id}/abort", post(abort))
        .with_state(service)
}

/// Serve until the listener fails.
pub async fn serve(
    listener: tokio::net::TcpListener,
    service: Arc<LabService>,
) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "lab service listening");
    axum::serve(listener, router(service)).await
}
