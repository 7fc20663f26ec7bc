//! Thin HTTP transport over the dispatcher: every route funnels through
//! one handler that converts the request, stamps the clock, and returns
//! the dispatcher's status and JSON body.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Body;
use axum::extract::State;
use axum::http::{header, Request, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::{Json, Router};
use serde_json::json;

use crate::trust::DirStore;

use super::{dispatch, ApiRequest, SharedNode};

/// Accommodates base64-encoded uploads in the tens of megabytes.
const BODY_LIMIT: usize = 64 * 1024 * 1024;

pub struct AppState {
    pub node: SharedNode<DirStore>,
    pub clock: Box<dyn Fn() -> i64 + Send + Sync>,
}

/// Unix seconds from the system clock.
pub fn system_clock() -> i64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("system clock before epoch")
        .as_secs() as i64
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new().fallback(handle).with_state(state)
}

/// Serve until the listener closes or the task is aborted.
pub async fn serve(state: Arc<AppState>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

async fn handle(State(state): State<Arc<AppState>>, req: Request<Body>) -> Response {
    let (parts, body) = req.into_parts();
    let bytes = match axum::body::to_bytes(body, BODY_LIMIT).await {
        Ok(bytes) => bytes,
        Err(e) => {
            return (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": format!("unreadable body: {e}") })),
            )
                .into_response();
        }
    };
    let query = parts.uri.query().map(parse_query).unwrap_or_default();
    let bearer = parts
        .headers
        .get(header::AUTHORIZATION)
        .and_then(|value| value.to_str().ok())
        .and_then(|value| value.strip_prefix("Bearer "))
        .map(str::to_string);
    let api_request = ApiRequest {
        method: parts.method.as_str().to_string(),
        path: parts.uri.path().to_string(),
        query,
        bearer,
        body: bytes.to_vec(),
    };
    let now = (state.clock)();
    let response = dispatch(&state.node, &api_request, now);
    let status = StatusCode::from_u16(response.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(response.body)).into_response()
}

fn parse_query(query: &str) -> BTreeMap<String, String> {
    url::form_urlencoded::parse(query.as_bytes())
        .map(|(k, v)| (k.into_owned(), v.into_owned()))
        .collect()
}
