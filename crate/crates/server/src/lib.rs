//! HTTP front of an [`AnnotationStore`].
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | GET | `/api/tasks/next?annotator=<id>` | | `{comment_id, text}` or 204 |
//! | POST | `/api/labels` | `{comment_id, annotator_id, label}` | `{accepted: true}` |
//! | GET | `/api/progress` | | `{total, fully_voted, per_annotator_counts}` |
//! | POST | `/api/aggregate` | `{min_votes}` | list of aggregation results |
//!
//! Labels are accepted as `"hope"`, `"non_hope"`, `"neutral"` or the codes
//! `1`, `0`, `-1`. Errors reply `{"error": "..."}` with status 400 (bad body
//! or label) or 404 (unknown comment or annotator).

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use hopeml_core::annotate::AnnotationStore;
use hopeml_core::{Error, Label};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownComment(_) | Error::UnknownAnnotator(_) => StatusCode::NOT_FOUND,
            Error::InvalidArgument(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        ApiError {
            status,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

async fn next_task(State(store): State<Arc<AnnotationStore>>, Query(q): Query<NextQuery>) -> ApiResult<Response> {
    let annotator = q
        .annotator
        .ok_or_else(|| ApiError::bad_request("missing query parameter annotator"))?;
    Ok(match store.next_task(&annotator)? {
        Some(comment) => Json(comment).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

fn parse_label(v: &Value) -> ApiResult<Label> {
    let parsed = match v {
        Value::String(s) => s.parse().ok(),
        Value::Number(n) => n
            .as_i64()
            .and_then(|c| i8::try_from(c).ok())
            .and_then(Label::from_code),
        _ => None,
    };
    parsed.ok_or_else(|| ApiError::bad_request(format!("invalid label {v}")))
}

fn json_body(body: &Bytes) -> ApiResult<Value> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Value::Object(Default::default()));
    }
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON body: {e}")))
}

fn string_field(body: &Value, name: &str) -> ApiResult<String> {
    body.get(name)
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ApiError::bad_request(format!("missing string field {name}")))
}

async fn submit_label(State(store): State<Arc<AnnotationStore>>, body: Bytes) -> ApiResult<Json<Value>> {
    let body = json_body(&body)?;
    let comment_id = string_field(&body, "comment_id")?;
    let annotator_id = string_field(&body, "annotator_id")?;
    let label = parse_label(body.get("label").unwrap_or(&Value::Null))?;
    // The append syncs to disk; keep it off the async workers.
    tokio::task::spawn_blocking(move || store.submit(&comment_id, &annotator_id, label))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: e.to_string(),
        })??;
    Ok(Json(json!({ "accepted": true })))
}

async fn progress(State(store): State<Arc<AnnotationStore>>) -> Json<Value> {
    Json(json!(store.progress()))
}

async fn aggregate(State(store): State<Arc<AnnotationStore>>, body: Bytes) -> ApiResult<Json<Value>> {
    let body = json_body(&body)?;
    let min_votes = match body.get("min_votes") {
        None | Some(Value::Null) => store.quorum(),
        Some(v) => v
            .as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| ApiError::bad_request(format!("invalid min_votes {v}")))?,
    };
    Ok(Json(json!(store.aggregate(min_votes))))
}

pub fn router(store: Arc<AnnotationStore>) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/labels", post(submit_label))
        .route("/api/progress", get(progress))
        .route("/api/aggregate", post(aggregate))
        .with_state(store)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, store: Arc<AnnotationStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("annotation service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store)).await
}
