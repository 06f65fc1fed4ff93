//! Python bindings: datasets, the dual-collection store, the retrieval and
//! answer pipeline, benchmark runs and the metrics.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rsrag_core::bench::{
    self, build_knowledge_store, BenchError, FailureKind, PipelineConfig, PipelineError, Report, SweepGrid,
    SweepReport, TaskReport,
};
use rsrag_core::embedding::{mock_embed as core_mock_embed, EmbedError, EmbeddingVector, DEFAULT_DIM};
use rsrag_core::knowledge::{self as kn, DatasetError, Split, TaskKind};
use rsrag_core::metrics::{self, MetricError};
use rsrag_core::retrieval::{self, Query, RetrievalError};
use rsrag_core::store::{self as st, AnnParams, CollectionEntry, CollectionKind, StoreError};
use rsrag_core::synthetic::{synthetic_dataset, SyntheticSpec};
use serde::de::DeserializeOwned;
use serde::Serialize;

create_exception!(rsrag, RsragError, PyException, "Base class of every rsrag error.");
create_exception!(rsrag, InputError, RsragError, "Invalid input, config or data.");
create_exception!(rsrag, ProviderError, RsragError, "An embedding, fusion or generation provider failed.");

fn input(e: impl std::fmt::Display) -> PyErr {
    InputError::new_err(e.to_string())
}

fn internal(e: impl std::fmt::Display) -> PyErr {
    RsragError::new_err(e.to_string())
}

fn dataset_err(e: DatasetError) -> PyErr {
    input(e)
}

fn store_err(e: StoreError) -> PyErr {
    match e {
        StoreError::IndexNotBuilt(_) | StoreError::ZeroVector => internal(e),
        other => input(other),
    }
}

fn embed_err(e: EmbedError) -> PyErr {
    match e {
        EmbedError::ProviderUnavailable(_) | EmbedError::DimensionMismatch { .. } => ProviderError::new_err(e.to_string()),
        other => input(other),
    }
}

fn retrieval_err(e: RetrievalError) -> PyErr {
    match e {
        RetrievalError::Store(s) => store_err(s),
        RetrievalError::Embed(e) => embed_err(e),
        other => input(other),
    }
}

fn pipeline_err(e: PipelineError) -> PyErr {
    let msg = format!("{} stage: {}", e.stage, e.message);
    match e.kind {
        FailureKind::Input => InputError::new_err(msg),
        FailureKind::Provider => ProviderError::new_err(msg),
        FailureKind::Internal => RsragError::new_err(msg),
    }
}

fn bench_err(e: BenchError) -> PyErr {
    match e {
        BenchError::ConfigInvalid(_) | BenchError::StoreEmpty => input(e),
        BenchError::Ingest(rsrag_core::ingest::IngestError::Embed { source, .. }) => embed_err(source),
        other => internal(other),
    }
}

fn metric_err(e: MetricError) -> PyErr {
    input(e)
}

/// Serialisable value to plain Python objects via JSON.
fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(internal)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(input)
}

fn task_kind(s: &str) -> PyResult<TaskKind> {
    s.parse().map_err(input)
}

fn collection_kind(s: &str) -> PyResult<CollectionKind> {
    match s {
        "image" => Ok(CollectionKind::Image),
        "text" => Ok(CollectionKind::Text),
        other => Err(input(format!("collection must be \"image\" or \"text\", got {other:?}"))),
    }
}

fn config_for(task: TaskKind, overrides: Option<&Bound<'_, PyAny>>) -> PyResult<PipelineConfig> {
    let base = PipelineConfig::for_task(task);
    match overrides {
        None => Ok(base),
        Some(o) => base.with_overrides(&from_py(o)?).map_err(bench_err),
    }
}

fn tokens(s: &str) -> Vec<String> {
    metrics::tokenize(s)
}

fn token_refs(refs: &[String]) -> Vec<Vec<String>> {
    refs.iter().map(|r| tokens(r)).collect()
}

/// Lower-cased alphanumeric tokens, as used by chunking and every metric.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    tokens(text)
}

/// Cumulative BLEU-n of one candidate against its references.
#[pyfunction]
#[pyo3(signature = (candidate, references, n = 4))]
fn bleu(candidate: &str, references: Vec<String>, n: usize) -> PyResult<f64> {
    metrics::bleu_n(&tokens(candidate), &token_refs(&references), n).map_err(metric_err)
}

#[pyfunction]
fn meteor(candidate: &str, references: Vec<String>) -> PyResult<f64> {
    metrics::meteor(&tokens(candidate), &token_refs(&references)).map_err(metric_err)
}

#[pyfunction]
fn rouge_l(candidate: &str, references: Vec<String>) -> PyResult<f64> {
    metrics::rouge_l(&tokens(candidate), &token_refs(&references)).map_err(metric_err)
}

/// Corpus CIDEr over `(candidate, references)` pairs.
#[pyfunction]
fn cider(items: Vec<(String, Vec<String>)>) -> PyResult<f64> {
    let items: Vec<_> = items.iter().map(|(c, r)| (tokens(c), token_refs(r))).collect();
    metrics::cider(&items).map_err(metric_err)
}

/// All seven corpus metrics as a dict.
#[pyfunction]
fn score_corpus<'py>(py: Python<'py>, items: Vec<(String, Vec<String>)>) -> PyResult<Bound<'py, PyAny>> {
    let report = metrics::score_corpus(&items).map_err(metric_err)?;
    to_py(py, &report)
}

/// `(1 - alpha) * s_t + alpha * s_i`.
#[pyfunction]
fn fuse_score(s_t: f64, s_i: f64, alpha: f64) -> PyResult<f64> {
    retrieval::fuse_score(s_t, s_i, alpha).map_err(retrieval_err)
}

/// Deterministic unit vector for `text` under `salt`.
#[pyfunction]
#[pyo3(signature = (text, dim = DEFAULT_DIM, salt = "rsrag-text"))]
fn mock_embed(text: &str, dim: usize, salt: &str) -> Vec<f64> {
    core_mock_embed(text.as_bytes(), dim, salt).values().to_vec()
}

/// Renders a report dict (task or sweep) as the text table.
#[pyfunction]
fn render_report(report: &Bound<'_, PyAny>) -> PyResult<String> {
    let value: serde_json::Value = from_py(report)?;
    if value.get("cells").is_some() {
        let r: SweepReport = serde_json::from_value(value).map_err(input)?;
        Ok(r.render_text())
    } else {
        let r: TaskReport = serde_json::from_value(value).map_err(input)?;
        Ok(r.render_text())
    }
}

/// Knowledge records plus task examples.
#[pyclass(module = "rsrag", frozen)]
struct Dataset {
    inner: kn::Dataset,
}

#[pymethods]
impl Dataset {
    /// Reads `records.jsonl` and `tasks.jsonl` from `path`.
    #[staticmethod]
    fn load(py: Python<'_>, path: std::path::PathBuf) -> PyResult<Self> {
        let inner = py.detach(|| kn::load_dataset(&path)).map_err(dataset_err)?;
        Ok(Dataset { inner })
    }

    /// Synthetic records; every example of each task is in the test split.
    #[staticmethod]
    #[pyo3(signature = (records, tasks = vec!["captioning".to_string()], seed = 0))]
    fn synthetic(records: usize, tasks: Vec<String>, seed: u64) -> PyResult<Self> {
        let tasks = tasks
            .iter()
            .map(|t| Ok((task_kind(t)?, (0, records))))
            .collect::<PyResult<_>>()?;
        let spec = SyntheticSpec { records, tasks, seed };
        Ok(Dataset {
            inner: synthetic_dataset(&spec).map_err(dataset_err)?,
        })
    }

    /// Synthetic dataset at full benchmark scale.
    #[staticmethod]
    #[pyo3(signature = (seed = 0))]
    fn full_scale(py: Python<'_>, seed: u64) -> PyResult<Self> {
        let spec = SyntheticSpec {
            seed,
            ..SyntheticSpec::full_scale()
        };
        let inner = py.detach(|| synthetic_dataset(&spec)).map_err(dataset_err)?;
        Ok(Dataset { inner })
    }

    fn write(&self, py: Python<'_>, path: std::path::PathBuf) -> PyResult<()> {
        py.detach(|| kn::write_dataset(&self.inner, &path)).map_err(dataset_err)
    }

    /// Per-task `{total, train, test}` counts.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.stats())
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.records())
    }

    #[pyo3(signature = (task, split = "test"))]
    fn examples<'py>(&self, py: Python<'py>, task: &str, split: &str) -> PyResult<Bound<'py, PyAny>> {
        let split = match split {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(input(format!("split must be \"train\" or \"test\", got {other:?}"))),
        };
        let ex: Vec<_> = self.inner.examples_for(task_kind(task)?, split).collect();
        to_py(py, &ex)
    }

    /// Rendered knowledge document of one record.
    fn document(&self, record_id: &str) -> PyResult<String> {
        let r = self
            .inner
            .record(record_id)
            .ok_or_else(|| input(format!("unknown record {record_id:?}")))?;
        Ok(kn::render_knowledge_document(r).text())
    }

    fn __len__(&self) -> usize {
        self.inner.records().len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(records={}, examples={})",
            self.inner.records().len(),
            self.inner.examples().len()
        )
    }
}

/// Paired image and text collections linked by record id.
#[pyclass(module = "rsrag")]
struct VectorStore {
    inner: st::VectorStore,
}

#[pymethods]
impl VectorStore {
    #[new]
    #[pyo3(signature = (dim, m = None, ef_construction = None, ef_search = None))]
    fn new(dim: usize, m: Option<usize>, ef_construction: Option<usize>, ef_search: Option<usize>) -> PyResult<Self> {
        if dim == 0 {
            return Err(input("dim must be positive"));
        }
        let d = AnnParams::default();
        let ann = AnnParams {
            m: m.unwrap_or(d.m),
            ef_construction: ef_construction.unwrap_or(d.ef_construction),
            ef_search: ef_search.unwrap_or(d.ef_search),
            ..d
        };
        Ok(VectorStore {
            inner: st::VectorStore::with_params(dim, ann),
        })
    }

    /// Ingests a dataset under `config` (task defaults when omitted).
    #[staticmethod]
    #[pyo3(signature = (dataset, config = None))]
    fn ingest(py: Python<'_>, dataset: &Dataset, config: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let cfg = config_for(TaskKind::Captioning, config)?;
        let (inner, _) = py
            .detach(|| build_knowledge_store(&dataset.inner, &cfg, AnnParams::default()))
            .map_err(bench_err)?;
        Ok(VectorStore { inner })
    }

    #[staticmethod]
    fn load(py: Python<'_>, path: std::path::PathBuf) -> PyResult<Self> {
        let inner = py.detach(|| st::VectorStore::load(&path)).map_err(store_err)?;
        Ok(VectorStore { inner })
    }

    /// Writes the snapshot; returns its id.
    fn persist(&self, py: Python<'_>, path: std::path::PathBuf) -> PyResult<String> {
        py.detach(|| self.inner.persist(&path)).map_err(store_err)
    }

    fn snapshot_id(&self) -> PyResult<String> {
        self.inner.snapshot_id().map_err(store_err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.counts())
    }

    /// Inserts or replaces an entry; the vector is L2-normalised.
    #[pyo3(signature = (collection, entry_id, record_id, vector, payload = None))]
    fn upsert(
        &mut self,
        collection: &str,
        entry_id: String,
        record_id: String,
        vector: Vec<f64>,
        payload: Option<&Bound<'_, PyDict>>,
    ) -> PyResult<()> {
        let kind = collection_kind(collection)?;
        let vector = EmbeddingVector::normalized(vector).map_err(input)?;
        let payload = match payload {
            Some(p) => from_py(p.as_any())?,
            None => st::Payload::new(),
        };
        self.inner
            .upsert(kind, CollectionEntry { entry_id, record_id, vector, payload })
            .map(|_| ())
            .map_err(store_err)
    }

    fn build_index(&mut self, py: Python<'_>) {
        let inner = &mut self.inner;
        py.detach(|| inner.build_index());
    }

    /// Top `tau` entries of one collection: dicts with entry_id, record_id
    /// and similarity.
    #[pyo3(signature = (collection, vector, tau = 10, exact = false))]
    fn search<'py>(
        &self,
        py: Python<'py>,
        collection: &str,
        vector: Vec<f64>,
        tau: usize,
        exact: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let kind = collection_kind(collection)?;
        let q = EmbeddingVector::normalized(vector).map_err(input)?;
        let hits = self.inner.search(kind, &q, tau, exact).map_err(store_err)?;
        to_py(py, &hits)
    }

    fn payload<'py>(&self, py: Python<'py>, collection: &str, entry_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner.get_payload(collection_kind(collection)?, entry_id))
    }

    fn __repr__(&self) -> String {
        let c = self.inner.counts();
        format!("VectorStore(dim={}, image={}, text={})", self.inner.dim(), c.image, c.text)
    }
}

/// Providers and a store under one config.
#[pyclass(module = "rsrag", frozen)]
struct Pipeline {
    inner: bench::Pipeline,
}

fn query(text: Option<String>, image_ref: Option<String>) -> PyResult<Query> {
    let q = Query::new(text, image_ref);
    q.validate().map_err(retrieval_err)?;
    Ok(q)
}

#[pymethods]
impl Pipeline {
    /// `config` is a dict of overrides on top of the task preset. The store
    /// is copied into the pipeline.
    #[new]
    #[pyo3(signature = (store, task = "captioning", config = None))]
    fn new(store: &VectorStore, task: &str, config: Option<&Bound<'_, PyAny>>) -> PyResult<Self> {
        let mut cfg = config_for(task_kind(task)?, None)?;
        if let Some(profile) = bench::recorded_embedder(&store.inner) {
            cfg.embedder = profile;
        }
        if let Some(o) = config {
            cfg = cfg.with_overrides(&from_py(o)?).map_err(bench_err)?;
        }
        let inner = bench::Pipeline::from_config(Arc::new(store.inner.clone()), cfg).map_err(bench_err)?;
        Ok(Pipeline { inner })
    }

    /// Same store and providers with some config keys replaced.
    fn with_config(&self, overrides: &Bound<'_, PyAny>) -> PyResult<Self> {
        let cfg = self.inner.config().with_overrides(&from_py(overrides)?).map_err(bench_err)?;
        Ok(Pipeline {
            inner: self.inner.with_config(cfg).map_err(bench_err)?,
        })
    }

    #[getter]
    fn config<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, self.inner.config())
    }

    #[getter]
    fn config_hash(&self) -> String {
        self.inner.config().config_hash()
    }

    #[getter]
    fn snapshot_id(&self) -> String {
        self.inner.snapshot_id().to_string()
    }

    /// Ranked records with per-side scores and supporting chunks.
    #[pyo3(signature = (text = None, image_ref = None))]
    fn retrieve<'py>(&self, py: Python<'py>, text: Option<String>, image_ref: Option<String>) -> PyResult<Bound<'py, PyAny>> {
        let q = query(text, image_ref)?;
        let out = py.detach(|| self.inner.retrieve(&q)).map_err(pipeline_err)?;
        to_py(py, &out)
    }

    /// Generated text with the rendered prompt, retrieval and fused context.
    #[pyo3(signature = (text = None, image_ref = None))]
    fn answer<'py>(&self, py: Python<'py>, text: Option<String>, image_ref: Option<String>) -> PyResult<Bound<'py, PyAny>> {
        let q = query(text, image_ref)?;
        let out = py.detach(|| self.inner.answer(&q)).map_err(pipeline_err)?;
        to_py(py, &out)
    }

    /// Evaluates the test split of `task`; returns the report dict.
    fn run_task<'py>(&self, py: Python<'py>, task: &str, dataset: &Dataset) -> PyResult<Bound<'py, PyAny>> {
        let task = task_kind(task)?;
        let run = py
            .detach(|| bench::run_task(task, &dataset.inner, &self.inner))
            .map_err(bench_err)?;
        to_py(py, &run.report)
    }

    /// One run per `(top_k, alpha)` cell; defaults keep the configured value.
    #[pyo3(signature = (task, dataset, top_k = None, alpha = None))]
    fn sweep<'py>(
        &self,
        py: Python<'py>,
        task: &str,
        dataset: &Dataset,
        top_k: Option<Vec<usize>>,
        alpha: Option<Vec<f64>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let task = task_kind(task)?;
        let cfg = self.inner.config();
        let grid = SweepGrid {
            top_k: top_k.unwrap_or_else(|| vec![cfg.top_k]),
            alpha: alpha.unwrap_or_else(|| vec![cfg.alpha]),
        };
        let (report, _) = py
            .detach(|| bench::sweep(task, &dataset.inner, &self.inner, &grid))
            .map_err(bench_err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Pipeline(snapshot_id={:?}, config_hash={:?})", self.inner.snapshot_id(), self.config_hash())
    }
}

#[pymodule]
fn rsrag(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("RsragError", m.py().get_type::<RsragError>())?;
    m.add("InputError", m.py().get_type::<InputError>())?;
    m.add("ProviderError", m.py().get_type::<ProviderError>())?;
    m.add_class::<Dataset>()?;
    m.add_class::<VectorStore>()?;
    m.add_class::<Pipeline>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(bleu, m)?)?;
    m.add_function(wrap_pyfunction!(meteor, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_l, m)?)?;
    m.add_function(wrap_pyfunction!(cider, m)?)?;
    m.add_function(wrap_pyfunction!(score_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_score, m)?)?;
    m.add_function(wrap_pyfunction!(mock_embed, m)?)?;
    m.add_function(wrap_pyfunction!(render_report, m)?)?;
    Ok(())
}
