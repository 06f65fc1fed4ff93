//! End-to-end task evaluation, ablation sweeps and report emission.

mod config;
mod pipeline;
mod report;
mod runner;
mod store;
mod sweep;

use thiserror::Error;

pub use config::{KnowledgeBase, PipelineConfig};
pub use pipeline::{Answer, FailureKind, Pipeline, PipelineError, Stage, StageTimings};
pub use report::{
    emit_report, emit_sweep, from_json, read_report, sweep_dir, to_json, write_timings, Report, ReportFormat,
    REPORT_JSON, REPORT_TEXT, TIMINGS_JSON,
};
pub use runner::{run_task, ExampleFailure, ExampleRecord, RetrievedRecord, TaskReport, TaskRun, TaskTimings, TOP_K_NOTE};
pub use store::{build_knowledge_store, knowledge_records, recorded_embedder, META_EMBEDDER, META_KNOWLEDGE_BASE};
pub use sweep::{sweep, SweepAxis, SweepCell, SweepGrid, SweepReport};

use crate::ingest::IngestError;
use crate::metrics::MetricError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("the vector store is empty")]
    StoreEmpty,
    #[error("invalid pipeline config: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("report serialisation failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("internal error: {0}")]
    Internal(String),
}
