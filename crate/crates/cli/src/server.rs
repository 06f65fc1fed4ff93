//! Read-only HTTP service over one snapshot at a time. The active snapshot
//! sits behind an `Arc` that reloads replace in one swap, so every request
//! works against exactly one snapshot from start to finish.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::State;
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rsrag_core::bench::{Answer, FailureKind, Pipeline, PipelineConfig, PipelineError, Stage};
use rsrag_core::embedding::EmbeddingVector;
use rsrag_core::knowledge::TaskKind;
use rsrag_core::retrieval::{Query, RetrievalOutcome};
use rsrag_core::store::VectorStore;
use serde::Deserialize;
use serde_json::{json, Value};
use tower::limit::ConcurrencyLimitLayer;

use crate::config::ConfigArgs;
use crate::error::{retrieval_error_name, CliError};

pub const CONFIG_HASH_HEADER: &str = "x-rsrag-config-hash";
pub const SNAPSHOT_ID_HEADER: &str = "x-rsrag-snapshot-id";

/// A loaded snapshot and the pipeline built over it.
pub struct Loaded {
    pub pipeline: Pipeline,
    pub snapshot_id: String,
    pub snapshot_dir: PathBuf,
}

#[derive(Debug, Default)]
struct ProviderHealth {
    embed: AtomicBool,
    fuse: AtomicBool,
    generate: AtomicBool,
}

pub struct ServiceState {
    task: TaskKind,
    config: ConfigArgs,
    snapshot_dir: Option<PathBuf>,
    current: RwLock<Option<Arc<Loaded>>>,
    health: ProviderHealth,
}

impl ServiceState {
    pub fn new(task: TaskKind, config: ConfigArgs, snapshot_dir: Option<PathBuf>) -> Arc<Self> {
        let health = ProviderHealth::default();
        for f in [&health.embed, &health.fuse, &health.generate] {
            f.store(true, Ordering::Relaxed);
        }
        Arc::new(ServiceState {
            task,
            config,
            snapshot_dir,
            current: RwLock::new(None),
            health,
        })
    }

    pub fn current(&self) -> Option<Arc<Loaded>> {
        self.current.read().expect("state lock").clone()
    }

    /// Loads and validates a snapshot without touching the active one.
    pub fn load(&self, dir: &Path) -> Result<Loaded, CliError> {
        let (store, snapshot_id) = VectorStore::load_with_id(dir)?;
        let cfg = self.config.resolve(self.task, Some(&store))?;
        let pipeline = Pipeline::from_config(Arc::new(store), cfg)?;
        Ok(Loaded {
            pipeline,
            snapshot_id,
            snapshot_dir: dir.to_path_buf(),
        })
    }

    /// Makes `loaded` the active snapshot; returns the previous one.
    pub fn install(&self, loaded: Loaded) -> Option<Arc<Loaded>> {
        self.current.write().expect("state lock").replace(Arc::new(loaded))
    }

    /// Re-reads the configured snapshot directory and swaps it in.
    pub fn reload(&self) -> Result<Arc<Loaded>, CliError> {
        let dir = self
            .snapshot_dir
            .as_deref()
            .ok_or_else(|| CliError::input("NoSnapshotDir", "no snapshot directory configured (RSRAG_SNAPSHOT_DIR)"))?;
        self.install(self.load(dir)?);
        Ok(self.current().expect("just installed"))
    }

    fn record(&self, result: Result<(), &PipelineError>) {
        let flags = [
            (Stage::Embed, &self.health.embed),
            (Stage::Fuse, &self.health.fuse),
            (Stage::Generate, &self.health.generate),
        ];
        match result {
            Ok(()) => flags.iter().for_each(|(_, f)| f.store(true, Ordering::Relaxed)),
            Err(e) if e.kind == FailureKind::Provider => {
                flags
                    .iter()
                    .filter(|(s, _)| *s == e.stage)
                    .for_each(|(_, f)| f.store(false, Ordering::Relaxed));
            }
            Err(_) => {}
        }
    }
}

pub fn retrieve_body(outcome: &RetrievalOutcome, config: &PipelineConfig, snapshot_id: &str) -> Value {
    json!({
        "candidates": outcome.candidates,
        "record_ids": outcome.candidates.iter().map(|c| &c.record_id).collect::<Vec<_>>(),
        "alpha": outcome.alpha,
        "warnings": outcome.warnings,
        "config": config,
        "config_hash": config.config_hash(),
        "snapshot_id": snapshot_id,
    })
}

pub fn answer_body(answer: &Answer, config: &PipelineConfig, snapshot_id: &str) -> Value {
    let c = &answer.retrieval.candidates;
    json!({
        "text": answer.text,
        "prompt": answer.prompt,
        "record_ids": c.iter().map(|c| &c.record_id).collect::<Vec<_>>(),
        "fused_scores": c.iter().map(|c| c.fused).collect::<Vec<_>>(),
        "candidates": c,
        "alpha": answer.retrieval.alpha,
        "context": answer.context,
        "warnings": answer.warnings,
        "config_hash": config.config_hash(),
        "snapshot_id": snapshot_id,
    })
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub text: Option<String>,
    pub image_ref: Option<String>,
    pub text_embedding: Option<Vec<f64>>,
    pub image_embedding: Option<Vec<f64>>,
    pub top_k: Option<usize>,
    pub alpha: Option<f64>,
    pub tau: Option<usize>,
    pub exact_search: Option<bool>,
}

struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl ToString, stage: Option<Stage>) -> Self {
        ApiError {
            status,
            body: json!({"error": error, "message": message.to_string(), "stage": stage}),
        }
    }

    fn pipeline(e: PipelineError) -> Self {
        let status = match e.kind {
            FailureKind::Input => StatusCode::BAD_REQUEST,
            FailureKind::Provider => StatusCode::BAD_GATEWAY,
            FailureKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, "PipelineFailure", &e.message, Some(e.stage))
    }
}

/// JSON body plus the config hash and snapshot id, both in the body and as
/// headers.
fn reply(status: StatusCode, mut body: Value, config_hash: Option<&str>, snapshot_id: Option<&str>) -> Response {
    if let Value::Object(m) = &mut body {
        m.entry("config_hash").or_insert_with(|| json!(config_hash));
        m.entry("snapshot_id").or_insert_with(|| json!(snapshot_id));
    }
    let mut resp = (status, Json(body)).into_response();
    for (name, value) in [(CONFIG_HASH_HEADER, config_hash), (SNAPSHOT_ID_HEADER, snapshot_id)] {
        if let Some(v) = value.and_then(|v| HeaderValue::from_str(v).ok()) {
            resp.headers_mut().insert(HeaderName::from_static(name), v);
        }
    }
    resp
}

fn no_snapshot(state: &ServiceState) -> Response {
    let hash = state.config.resolve(state.task, None).ok().map(|c| c.config_hash());
    reply(
        StatusCode::SERVICE_UNAVAILABLE,
        json!({"error": "NoSnapshot", "message": "no snapshot is loaded"}),
        hash.as_deref(),
        None,
    )
}

fn embedding(values: Option<Vec<f64>>) -> Result<Option<EmbeddingVector>, ApiError> {
    values
        .map(|v| {
            EmbeddingVector::normalized(v)
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "InvalidEmbedding", e, None))
        })
        .transpose()
}

/// The request's query and the per-request config, validated.
fn prepare(loaded: &Loaded, req: QueryRequest) -> Result<(Query, Pipeline), ApiError> {
    let mut query = Query::new(req.text, req.image_ref);
    query.text_embedding = embedding(req.text_embedding)?;
    query.image_embedding = embedding(req.image_embedding)?;
    query
        .validate()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, retrieval_error_name(&e), &e, None))?;
    let base = loaded.pipeline.config();
    let cfg = PipelineConfig {
        top_k: req.top_k.unwrap_or(base.top_k),
        alpha: req.alpha.unwrap_or(base.alpha),
        tau: req.tau.unwrap_or(base.tau),
        exact_search: req.exact_search.unwrap_or(base.exact_search),
        ..base.clone()
    };
    cfg.retrieval()
        .validate()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, retrieval_error_name(&e), &e, None))?;
    let pipeline = loaded
        .pipeline
        .with_config(cfg)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "ConfigInvalid", e, None))?;
    Ok((query, pipeline))
}

enum Call {
    Retrieve,
    Answer,
}

async fn handle(state: Arc<ServiceState>, body: &[u8], call: Call) -> Response {
    let Some(loaded) = state.current() else {
        return no_snapshot(&state);
    };
    let base_hash = loaded.pipeline.config().config_hash();
    let parsed = serde_json::from_slice::<QueryRequest>(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "InvalidJson", e, None))
        .and_then(|req| prepare(&loaded, req));
    let (query, pipeline) = match parsed {
        Ok(p) => p,
        Err(e) => return reply(e.status, e.body, Some(&base_hash), Some(&loaded.snapshot_id)),
    };
    let hash = pipeline.config().config_hash();
    let snapshot_id = loaded.snapshot_id.clone();
    let worker_state = state.clone();
    // providers may block on network I/O
    let result = tokio::task::spawn_blocking(move || {
        let out = match call {
            Call::Retrieve => pipeline
                .retrieve(&query)
                .map(|o| retrieve_body(&o, pipeline.config(), &snapshot_id)),
            Call::Answer => pipeline
                .answer(&query)
                .map(|a| answer_body(&a, pipeline.config(), &snapshot_id)),
        };
        worker_state.record(out.as_ref().map(|_| ()));
        out
    })
    .await;
    match result {
        Ok(Ok(body)) => reply(StatusCode::OK, body, Some(&hash), Some(&loaded.snapshot_id)),
        Ok(Err(e)) => {
            let e = ApiError::pipeline(e);
            reply(e.status, e.body, Some(&hash), Some(&loaded.snapshot_id))
        }
        Err(join) => reply(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({"error": "Internal", "message": join.to_string()}),
            Some(&hash),
            Some(&loaded.snapshot_id),
        ),
    }
}

async fn retrieve_handler(State(state): State<Arc<ServiceState>>, body: axum::body::Bytes) -> Response {
    handle(state, &body, Call::Retrieve).await
}

async fn answer_handler(State(state): State<Arc<ServiceState>>, body: axum::body::Bytes) -> Response {
    handle(state, &body, Call::Answer).await
}

async fn health_handler(State(state): State<Arc<ServiceState>>) -> Response {
    let h = &state.health;
    let providers = |cfg: &PipelineConfig| {
        json!({
            "embedder": {"kind": cfg.embedder.provider, "healthy": h.embed.load(Ordering::Relaxed)},
            "fusion": {"mode": cfg.fusion_mode, "healthy": h.fuse.load(Ordering::Relaxed)},
            "generator": {"kind": cfg.generator.kind, "healthy": h.generate.load(Ordering::Relaxed)},
        })
    };
    match state.current() {
        Some(l) => {
            let cfg = l.pipeline.config();
            let hash = cfg.config_hash();
            reply(
                StatusCode::OK,
                json!({"status": "ok", "task": state.task, "counts": l.pipeline.store().counts(), "providers": providers(cfg)}),
                Some(&hash),
                Some(&l.snapshot_id),
            )
        }
        None => no_snapshot(&state),
    }
}

async fn config_handler(State(state): State<Arc<ServiceState>>) -> Response {
    match state.current() {
        Some(l) => {
            let cfg = l.pipeline.config();
            let hash = cfg.config_hash();
            reply(
                StatusCode::OK,
                json!({"task": state.task, "config": cfg, "snapshot_dir": l.snapshot_dir}),
                Some(&hash),
                Some(&l.snapshot_id),
            )
        }
        None => match state.config.resolve(state.task, None) {
            Ok(cfg) => {
                let hash = cfg.config_hash();
                reply(StatusCode::OK, json!({"task": state.task, "config": cfg}), Some(&hash), None)
            }
            Err(e) => reply(
                StatusCode::INTERNAL_SERVER_ERROR,
                json!({"error": e.error, "message": e.message}),
                None,
                None,
            ),
        },
    }
}

async fn reload_handler(State(state): State<Arc<ServiceState>>) -> Response {
    let worker = state.clone();
    let result = tokio::task::spawn_blocking(move || worker.reload()).await;
    match result {
        Ok(Ok(l)) => {
            let hash = l.pipeline.config().config_hash();
            reply(StatusCode::OK, json!({"status": "reloaded"}), Some(&hash), Some(&l.snapshot_id))
        }
        Ok(Err(e)) => {
            // the previous snapshot stays active
            let current = state.current();
            reply(
                StatusCode::BAD_REQUEST,
                json!({"error": e.error, "message": e.message}),
                current.as_ref().map(|l| l.pipeline.config().config_hash()).as_deref(),
                current.as_ref().map(|l| l.snapshot_id.as_str()),
            )
        }
        Err(join) => reply(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({"error": "Internal", "message": join.to_string()}),
            None,
            None,
        ),
    }
}

pub fn router(state: Arc<ServiceState>, max_concurrency: usize) -> Router {
    Router::new()
        .route("/v1/retrieve", post(retrieve_handler))
        .route("/v1/answer", post(answer_handler))
        .route("/v1/health", get(health_handler))
        .route("/v1/config", get(config_handler))
        .route("/v1/reload", post(reload_handler))
        .layer(ConcurrencyLimitLayer::new(max_concurrency.max(1)))
        .with_state(state)
}

pub fn serve(state: Arc<ServiceState>, bind: &str, port: u16, max_concurrency: usize) -> Result<(), CliError> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::internal)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((bind, port))
            .await
            .map_err(|e| CliError::input("BindFailed", format!("{bind}:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(CliError::internal)?;
        eprintln!(
            "{}",
            json!({"event": "listening", "addr": addr.to_string(), "snapshot_id": state.current().map(|l| l.snapshot_id.clone())})
        );
        axum::serve(listener, router(state, max_concurrency))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(CliError::internal)
    })
}
