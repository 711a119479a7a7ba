//! HTTP API over a loaded corpus.
//!
//! | route | response |
//! |---|---|
//! | `GET /api/papers?q=&limit=` | matching papers |
//! | `GET /api/papers/{id}` | one paper with reference and citation counts |
//! | `POST /api/ideaflow/{id}` | computes (or reuses) the result document |
//! | `GET /api/ideaflow/{id}` | the cached result document, or 404 |
//! | `GET /api/ideaflow/{id}/report` | the cached report as `text/html`, or 404 |
//!
//! The POST body may hold a partial config object; `?digest=` on the GETs
//! selects a result computed under such overrides (default: the server
//! config).

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use ideareader_core::pipeline::{run_pipeline, PipelineConfig, PipelineError};
use ideareader_core::tree::render_report;
use ideareader_core::{CitationGraph, CorpusStore, PaperRecord};
use log::error;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::net::TcpListener;
use tower_http::cors::CorsLayer;

use crate::cache::{CacheKey, CachedResult, ResultCache};

pub const DEFAULT_SEARCH_LIMIT: usize = 20;
pub const MAX_SEARCH_LIMIT: usize = 200;
pub const TIMINGS_HEADER: &str = "x-stage-timings";

/// Shared, read-only state plus the result cache.
#[derive(Debug)]
pub struct AppState {
    pub store: CorpusStore,
    pub graph: CitationGraph,
    pub config: PipelineConfig,
    pub cache: ResultCache,
}

impl AppState {
    pub fn new(store: CorpusStore, config: PipelineConfig) -> Arc<Self> {
        let graph = CitationGraph::build(&store);
        Arc::new(Self {
            store,
            graph,
            config,
            cache: ResultCache::new(),
        })
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("internal error")]
    Internal(String),
}

impl From<PipelineError> for ServiceError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::UnknownTarget(id) => ServiceError::NotFound(format!("unknown paper {id:?}")),
            PipelineError::Config(msg) => ServiceError::BadRequest(msg),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody {
    error: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Internal(detail) => {
                error!("request failed: {detail}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (status, Json(ErrorBody { error: self.to_string() })).into_response()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/papers", get(search))
        .route("/api/papers/{id}", get(paper))
        .route("/api/ideaflow/{id}", get(cached_result).post(compute))
        .route("/api/ideaflow/{id}/report", get(cached_report))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

#[derive(Debug, Deserialize)]
struct SearchParams {
    q: Option<String>,
    limit: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct PaperView<'a> {
    #[serde(flatten)]
    pub record: &'a PaperRecord,
    pub reference_count: usize,
    pub citation_count: usize,
}

fn view<'a>(state: &'a AppState, record: &'a PaperRecord) -> PaperView<'a> {
    PaperView {
        record,
        reference_count: state.graph.reference_count(&record.id),
        citation_count: state.graph.citation_count(&record.id),
    }
}

async fn search(State(state): State<Arc<AppState>>, Query(params): Query<SearchParams>) -> Result<Response, ServiceError> {
    let limit = match params.limit.as_deref() {
        None => DEFAULT_SEARCH_LIMIT,
        Some(raw) => match raw.parse::<usize>() {
            Ok(n) if (1..=MAX_SEARCH_LIMIT).contains(&n) => n,
            _ => {
                return Err(ServiceError::BadRequest(format!(
                    "limit must be an integer in [1, {MAX_SEARCH_LIMIT}]"
                )))
            }
        },
    };
    let query = params.q.unwrap_or_default();
    let hits: Vec<PaperView> = state.store.search(&query, limit).into_iter().map(|p| view(&state, p)).collect();
    Ok(Json(hits).into_response())
}

async fn paper(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let record = state
        .store
        .get(&id)
        .ok_or_else(|| ServiceError::NotFound(format!("unknown paper {id:?}")))?;
    Ok(Json(view(&state, record)).into_response())
}

#[derive(Debug, Deserialize)]
struct DigestParam {
    digest: Option<String>,
}

fn lookup(state: &AppState, id: String, digest: Option<String>) -> Result<Arc<CachedResult>, ServiceError> {
    if !state.store.contains(&id) {
        return Err(ServiceError::NotFound(format!("unknown paper {id:?}")));
    }
    let key = CacheKey {
        target: id,
        digest: digest.unwrap_or_else(|| state.config.digest()),
    };
    state
        .cache
        .get(&key)
        .ok_or_else(|| ServiceError::NotFound(format!("no result computed for {:?}", key.target)))
}

fn document_response(entry: &CachedResult) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    if let Some(v) = serde_json::to_string(&entry.timings).ok().and_then(|s| HeaderValue::try_from(s).ok()) {
        headers.insert(TIMINGS_HEADER, v);
    }
    (StatusCode::OK, headers, entry.bytes.clone()).into_response()
}

async fn cached_result(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DigestParam>,
) -> Result<Response, ServiceError> {
    let entry = lookup(&state, id, q.digest)?;
    Ok(document_response(&entry))
}

async fn cached_report(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<DigestParam>,
) -> Result<Response, ServiceError> {
    let entry = lookup(&state, id, q.digest)?;
    Ok((
        [(header::CONTENT_TYPE, "text/html; charset=utf-8")],
        entry.report.clone(),
    )
        .into_response())
}

async fn compute(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ServiceError> {
    let config = if body.iter().all(u8::is_ascii_whitespace) {
        state.config.clone()
    } else {
        let overrides: serde_json::Value =
            serde_json::from_slice(&body).map_err(|e| ServiceError::BadRequest(format!("malformed body: {e}")))?;
        state.config.with_overrides(&overrides)?
    };
    if !state.store.contains(&id) {
        return Err(ServiceError::NotFound(format!("unknown paper {id:?}")));
    }
    let key = CacheKey {
        target: id.clone(),
        digest: config.digest(),
    };
    let worker = state.clone();
    let entry = state
        .cache
        .get_or_compute(key, || async move {
            tokio::task::spawn_blocking(move || {
                let result = run_pipeline(&worker.store, &worker.graph, &id, &config)?;
                Ok::<_, ServiceError>(CachedResult {
                    report: render_report(&result.document),
                    bytes: result.bytes,
                    timings: result.timings,
                })
            })
            .await
            .map_err(|e| ServiceError::Internal(e.to_string()))?
        })
        .await?;
    Ok(document_response(&entry))
}

/// Serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// A server on its own runtime thread, stopped on drop. Meant for tests and
/// embedding.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundServer {
    pub fn start(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<Self> {
        let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
        let listener = runtime.block_on(TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let _ = axum::serve(listener, router(state))
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        });
        Ok(Self {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
