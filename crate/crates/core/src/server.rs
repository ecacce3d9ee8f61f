//! Local HTTP service for the sketching UI.
//!
//! `POST /synthesize` takes a task document and answers with the same result
//! document the CLI writes. Each request runs on a blocking thread with its
//! own cancel flag, raised when the client goes away.

use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use tokio::sync::Semaphore;

use crate::task::{TaskError, TaskFile, ENGINE, VERSION};

pub const DEFAULT_MAX_CONCURRENT: usize = 4;
pub const MAX_TABLE_CELLS: usize = 1_000_000;
const BODY_LIMIT: usize = 256 << 20;

#[derive(Clone)]
pub struct ServiceState {
    permits: Arc<Semaphore>,
    /// Searches still running, including ones whose client has left.
    pub in_flight: Arc<AtomicUsize>,
    next_id: Arc<AtomicU64>,
}

impl ServiceState {
    pub fn new(max_concurrent: usize) -> ServiceState {
        ServiceState {
            permits: Arc::new(Semaphore::new(max_concurrent.max(1))),
            in_flight: Arc::new(AtomicUsize::new(0)),
            next_id: Arc::new(AtomicU64::new(1)),
        }
    }
}

pub fn router(state: ServiceState) -> Router {
    Router::new()
        .route("/synthesize", post(synthesize))
        .route("/health", get(|| async { "ok" }))
        .route("/version", get(|| async { Json(json!({"engine": ENGINE, "version": VERSION})) }))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

pub async fn serve(addr: std::net::SocketAddr, max_concurrent: usize) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(ServiceState::new(max_concurrent))).await
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({"error": message.to_string()}))).into_response()
}

/// Raises the cancel flag if the handler is dropped before it finishes.
struct Disconnect {
    id: u64,
    cancel: Arc<AtomicBool>,
    armed: bool,
}

impl Drop for Disconnect {
    fn drop(&mut self) {
        if self.armed {
            self.cancel.store(true, Ordering::Relaxed);
            log::info!("request {}: client disconnected, cancelling search", self.id);
        }
    }
}

async fn synthesize(State(state): State<ServiceState>, body: Bytes) -> Response {
    let Ok(permit) = state.permits.clone().try_acquire_owned() else {
        return error(StatusCode::TOO_MANY_REQUESTS, "too many concurrent requests");
    };
    let file: TaskFile = match serde_json::from_slice(&body) {
        Ok(f) => f,
        Err(e) => return error(StatusCode::BAD_REQUEST, TaskError::Parse(e)),
    };
    if let Some(s) = file.tables.iter().find(|s| s.path.is_some()) {
        return error(
            StatusCode::BAD_REQUEST,
            format!("table `{}`: file paths are not accepted over HTTP, send the data inline", s.name),
        );
    }
    let task = match file.resolve(Path::new(".")) {
        Ok(t) => t,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    if task.largest_table() > MAX_TABLE_CELLS {
        return error(
            StatusCode::PAYLOAD_TOO_LARGE,
            format!("a table has {} cells, the limit is {MAX_TABLE_CELLS}", task.largest_table()),
        );
    }

    let id = state.next_id.fetch_add(1, Ordering::Relaxed);
    let cancel = Arc::new(AtomicBool::new(false));
    let mut guard = Disconnect {
        id,
        cancel: cancel.clone(),
        armed: true,
    };
    let in_flight = state.in_flight.clone();
    in_flight.fetch_add(1, Ordering::SeqCst);
    log::info!("request {id}: {} cells, budget {}s", task.cells(), task.options.budget);
    let job = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        let start = Instant::now();
        let (solutions, doc) = task.run(Some(cancel.clone()));
        if cancel.load(Ordering::Relaxed) {
            log::info!("request {id}: search stopped on cancel after {:.2?}", start.elapsed());
        } else {
            log::info!("request {id}: {} solutions in {:.2?}", solutions.len(), start.elapsed());
        }
        in_flight.fetch_sub(1, Ordering::SeqCst);
        doc
    });
    let doc = job.await;
    guard.armed = false;
    match doc {
        Ok(doc) => (
            StatusCode::OK,
            [(header::CONTENT_TYPE, "application/json")],
            serde_json::to_string(&doc).expect("result serializes"),
        )
            .into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}
