//! HTTP API.

use std::io::Write;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, Request, State};
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::app::{App, ServiceError};

pub const REQUEST_ID: HeaderName = HeaderName::from_static("x-request-id");

/// One JSON line per completed HTTP request.
pub struct HttpAudit {
    sink: Mutex<Box<dyn Write + Send>>,
}

impl HttpAudit {
    pub fn new(sink: impl Write + Send + 'static) -> Self {
        Self {
            sink: Mutex::new(Box::new(sink)),
        }
    }

    fn record(&self, line: &HttpAuditLine) {
        let text = serde_json::to_string(line).expect("audit line serializes");
        let mut sink = self.sink.lock().unwrap_or_else(|p| p.into_inner());
        let _ = writeln!(sink, "{text}");
        let _ = sink.flush();
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HttpAuditLine {
    pub timestamp: chrono::DateTime<Utc>,
    pub request_id: String,
    pub method: String,
    pub path: String,
    pub status: u16,
    pub latency_ms: f64,
}

#[derive(Clone)]
struct AppState {
    app: Arc<App>,
    audit: Arc<HttpAudit>,
}

pub fn router(app: Arc<App>, audit: HttpAudit) -> Router {
    let static_dir = app.config.static_dir.clone();
    let state = AppState {
        app,
        audit: Arc::new(audit),
    };
    let mut router = Router::new()
        .route("/api/listings", post(submit_listing))
        .route("/api/jobs/:job_id", get(get_job))
        .route("/api/listings/:listing_id/summary", get(get_summary))
        .route("/api/listings/:listing_id/query", post(post_query))
        .route("/api/models", get(get_models));
    if let Some(dir) = static_dir {
        router = router.fallback_service(ServeDir::new(dir));
    }
    router
        .layer(middleware::from_fn_with_state(state.clone(), request_id_and_audit))
        .with_state(state)
}

async fn request_id_and_audit(State(state): State<AppState>, mut request: Request, next: Next) -> Response {
    let started = Instant::now();
    let request_id = request
        .headers()
        .get(&REQUEST_ID)
        .and_then(|v| v.to_str().ok())
        .filter(|v| !v.is_empty() && v.len() <= 128)
        .map(str::to_owned)
        .unwrap_or_else(|| uuid::Uuid::new_v4().simple().to_string());
    let header = HeaderValue::from_str(&request_id).unwrap_or_else(|_| HeaderValue::from_static("invalid"));
    request.headers_mut().insert(REQUEST_ID, header.clone());
    let method = request.method().to_string();
    let path = request.uri().path().to_owned();

    let mut response = next.run(request).await;
    response.headers_mut().insert(REQUEST_ID, header);
    state.audit.record(&HttpAuditLine {
        timestamp: Utc::now(),
        request_id,
        method,
        path,
        status: response.status().as_u16(),
        latency_ms: started.elapsed().as_secs_f64() * 1000.0,
    });
    response
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.to_json())).into_response()
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Io(format!("worker failed: {e}")))?
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    body.map(|Json(v)| v).map_err(|e| ServiceError::BadRequest(e.body_text()))
}

#[derive(Debug, Deserialize)]
struct SubmitBody {
    url: String,
    #[serde(default)]
    provider: Option<String>,
}

#[derive(Debug, Serialize)]
struct SubmitReply {
    job_id: String,
    listing_id: String,
    state: crate::jobs::JobState,
}

async fn submit_listing(
    State(state): State<AppState>,
    body: Result<Json<SubmitBody>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let body = json_body(body)?;
    let app = Arc::clone(&state.app);
    let submission = blocking(move || app.submit(&body.url, body.provider.as_deref())).await?;
    let job = submission.job;
    if submission.needs_fetch {
        let app = Arc::clone(&state.app);
        let job_id = job.job_id.clone();
        tokio::task::spawn_blocking(move || {
            if let Err(e) = app.run_job(&job_id) {
                tracing::error!(job_id, "job bookkeeping failed: {e}");
            }
        });
    }
    let reply = SubmitReply {
        job_id: job.job_id,
        listing_id: job.listing_id.to_string(),
        state: job.state,
    };
    Ok((StatusCode::ACCEPTED, Json(reply)).into_response())
}

async fn get_job(State(state): State<AppState>, Path(job_id): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(state.app.job(&job_id)?).into_response())
}

#[derive(Debug, Deserialize)]
struct SummaryParams {
    lang: Option<String>,
    model: Option<String>,
}

async fn get_summary(
    State(state): State<AppState>,
    Path(listing_id): Path<String>,
    Query(params): Query<SummaryParams>,
) -> Result<Response, ServiceError> {
    let app = Arc::clone(&state.app);
    let result = blocking(move || {
        let corpus = app.ready_corpus(&listing_id)?;
        app.summary(&corpus, params.lang.as_deref(), params.model.as_deref())
    })
    .await?;
    Ok(Json(result).into_response())
}

#[derive(Debug, Deserialize)]
struct QueryBody {
    question: String,
    #[serde(default)]
    lang: Option<String>,
    #[serde(default)]
    model: Option<String>,
}

async fn post_query(
    State(state): State<AppState>,
    Path(listing_id): Path<String>,
    body: Result<Json<QueryBody>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let body = json_body(body)?;
    let app = Arc::clone(&state.app);
    let result = blocking(move || {
        let corpus = app.ready_corpus(&listing_id)?;
        app.query(&corpus, &body.question, body.lang.as_deref(), body.model.as_deref())
    })
    .await?;
    Ok(Json(result).into_response())
}

async fn get_models(State(state): State<AppState>) -> Response {
    let models: Vec<_> = state.app.models().iter().map(|p| (**p).clone()).collect();
    Json(models).into_response()
}
