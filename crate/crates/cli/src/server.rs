//! Read-only HTTP service over a built index: `GET /healthz`,
//! `POST /v1/search`, `GET /v1/documents/{id}`.

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use crossim_core::index::IndexError;
use crossim_core::{sha256_file, DocKind, Document, Neighbor, SearchFilter, VectorIndex};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::commands::{load_documents, load_index, ServeArgs};
use crate::config::{require_path, RunConfig};

pub struct ServiceState {
    pub index: VectorIndex,
    pub documents: HashMap<String, Document>,
    /// SHA-256 of the index file.
    pub index_checksum: String,
}

impl ServiceState {
    pub fn load(index: &Path, store: &Path, documents: &Path) -> anyhow::Result<Self> {
        let docs = load_documents(documents)?;
        Ok(Self {
            index: load_index(index, store)?,
            documents: docs.into_iter().map(|d| (d.id.clone(), d)).collect(),
            index_checksum: sha256_file(index)
                .with_context(|| format!("hashing {}", index.display()))?,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterBody {
    pub year_min: Option<i32>,
    pub year_max: Option<i32>,
    pub kind: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchRequest {
    pub query_id: Option<String>,
    pub vector: Option<Vec<f32>>,
    pub k: usize,
    pub filter: Option<FilterBody>,
    pub exclude: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResponse {
    pub results: Vec<Neighbor>,
    pub index_checksum: String,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, message.into())
}

pub fn router(state: Arc<ServiceState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/search", post(search))
        .route("/v1/documents/{id}", get(document))
        .with_state(state)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn document(
    State(state): State<Arc<ServiceState>>,
    UrlPath(id): UrlPath<String>,
) -> Response {
    match state.documents.get(&id) {
        Some(doc) => Json(doc).into_response(),
        None => {
            ApiError(StatusCode::NOT_FOUND, format!("document `{id}` not found")).into_response()
        }
    }
}

/// Parses and validates a request into a query vector, filter and exclusions.
fn prepare(
    state: &ServiceState,
    body: &[u8],
) -> Result<(Vec<f32>, usize, SearchFilter, HashSet<String>), ApiError> {
    let req: SearchRequest =
        serde_json::from_slice(body).map_err(|e| bad_request(format!("malformed request: {e}")))?;
    if req.k == 0 {
        return Err(bad_request("k must be positive"));
    }
    let query = match (req.query_id, req.vector) {
        (Some(id), None) => state
            .index
            .store()
            .get(&id)
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("document `{id}` not found")))?
            .to_vec(),
        (None, Some(v)) => v,
        _ => return Err(bad_request("give exactly one of query_id and vector")),
    };
    let filter = match req.filter {
        None => SearchFilter::default(),
        Some(f) => {
            let kind = f
                .kind
                .map(|k| k.parse::<DocKind>())
                .transpose()
                .map_err(bad_request)?;
            SearchFilter::new(f.year_min, f.year_max, kind)
                .map_err(|e| bad_request(e.to_string()))?
        }
    };
    Ok((
        query,
        req.k,
        filter,
        req.exclude.unwrap_or_default().into_iter().collect(),
    ))
}

async fn search(
    State(state): State<Arc<ServiceState>>,
    body: Bytes,
) -> Result<Json<SearchResponse>, ApiError> {
    let (query, k, filter, exclude) = prepare(&state, &body)?;
    let worker = Arc::clone(&state);
    let results = tokio::task::spawn_blocking(move || {
        worker.index.search(&query, k, &filter, Some(&exclude))
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    .map_err(|e| match e {
        IndexError::DimMismatch { .. } | IndexError::ZeroVector(_) | IndexError::ZeroK => {
            bad_request(e.to_string())
        }
        other => ApiError(StatusCode::INTERNAL_SERVER_ERROR, other.to_string()),
    })?;
    Ok(Json(SearchResponse {
        results,
        index_checksum: state.index_checksum.clone(),
    }))
}

/// Serves until ctrl-c.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: Arc<ServiceState>,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub fn run_from_args(args: &ServeArgs, cfg: &mut RunConfig) -> anyhow::Result<()> {
    let index = require_path(&args.index, &cfg.paths.index, "index")?;
    let store = require_path(&args.store, &cfg.paths.store, "store")?;
    let documents = require_path(&args.documents, &cfg.paths.documents, "documents")?;
    for p in [&index, &store, &documents] {
        if !p.is_file() {
            return Err(crate::input_error(format!(
                "input file {} does not exist",
                p.display()
            )));
        }
    }
    let addr: SocketAddr = args
        .addr
        .parse()
        .map_err(|e| crate::usage_error(format!("invalid --addr `{}`: {e}", args.addr)))?;
    let state = Arc::new(ServiceState::load(&index, &store, &documents)?);
    let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        log::warn!(
            "serving {} vectors on http://{}",
            state.index.len(),
            listener.local_addr()?
        );
        serve(listener, state).await.context("serving")
    })
}
