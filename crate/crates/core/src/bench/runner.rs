use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pipeline::{Pipeline, PipelineError, Stage, StageTimings};
use super::{BenchError, KnowledgeBase, PipelineConfig};
use crate::knowledge::{Dataset, Split, TaskExample, TaskKind};
use crate::metrics::{classification_accuracy, score_corpus, AccuracyReport, MetricReport};
use crate::retrieval::Query;

/// Recorded alongside every report.
pub const TOP_K_NOTE: &str = "top_k is both the re-ranking cutoff and the number of fused snippets";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedRecord {
    pub record_id: String,
    pub fused: f64,
    pub s_t: f64,
    pub s_i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleFailure {
    pub stage: Stage,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub example_id: String,
    pub record_id: String,
    pub prediction: String,
    pub gold: Vec<String>,
    pub alpha: f64,
    pub retrieved: Vec<RetrievedRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    /// Set when the example failed; its prediction is empty and scores 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<ExampleFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: TaskKind,
    pub config: PipelineConfig,
    pub config_hash: String,
    pub snapshot_id: String,
    pub knowledge_base: KnowledgeBase,
    pub n_examples: usize,
    pub n_failed: usize,
    pub metrics: MetricReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<AccuracyReport>,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub examples: Vec<ExampleRecord>,
}

/// Wall-clock statistics of one run; kept out of [`TaskReport`] so reports
/// stay byte-identical across runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskTimings {
    pub total_ms: f64,
    pub retrieve_ms: f64,
    pub fuse_ms: f64,
    pub generate_ms: f64,
    pub score_ms: f64,
    pub examples: usize,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl TaskTimings {
    fn from_stages(total: Duration, s: StageTimings, examples: usize) -> Self {
        TaskTimings {
            total_ms: ms(total),
            retrieve_ms: ms(s.retrieve),
            fuse_ms: ms(s.fuse),
            generate_ms: ms(s.generate),
            score_ms: ms(s.score),
            examples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskRun {
    pub report: TaskReport,
    pub timings: TaskTimings,
}

fn evaluate(pipeline: &Pipeline, e: &TaskExample) -> (ExampleRecord, StageTimings) {
    let query = Query::new(Some(e.query_text.clone()), Some(e.image_ref.clone()));
    let mut rec = ExampleRecord {
        example_id: e.example_id.clone(),
        record_id: e.record_id.clone(),
        prediction: String::new(),
        gold: e.gold.clone(),
        alpha: pipeline.config().alpha,
        retrieved: Vec::new(),
        warnings: Vec::new(),
        failure: None,
    };
    match pipeline.answer(&query) {
        Ok(a) => {
            rec.prediction = a.text;
            rec.alpha = a.retrieval.alpha;
            rec.retrieved = a
                .retrieval
                .candidates
                .iter()
                .map(|c| RetrievedRecord {
                    record_id: c.record_id.clone(),
                    fused: c.fused,
                    s_t: c.s_t,
                    s_i: c.s_i,
                })
                .collect();
            rec.warnings = a.warnings;
            (rec, a.timings)
        }
        Err(PipelineError { stage, message, .. }) => {
            rec.failure = Some(ExampleFailure { stage, message });
            (rec, StageTimings::default())
        }
    }
}

fn pool(parallelism: usize) -> Result<rayon::ThreadPool, BenchError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism)
        .build()
        .map_err(|e| BenchError::Internal(e.to_string()))
}

/// Evaluates every test example of `task`. Failures are recorded per
/// example and score 0; they never abort the run.
pub fn run_task(task: TaskKind, dataset: &Dataset, pipeline: &Pipeline) -> Result<TaskRun, BenchError> {
    let config = pipeline.config();
    config.validate()?;
    if pipeline.store().is_empty() {
        return Err(BenchError::StoreEmpty);
    }
    let start = Instant::now();
    let mut examples: Vec<&TaskExample> = dataset.examples_for(task, Split::Test).collect();
    examples.sort_by(|a, b| a.example_id.cmp(&b.example_id));

    let results: Vec<(ExampleRecord, StageTimings)> =
        pool(config.parallelism)?.install(|| examples.par_iter().map(|e| evaluate(pipeline, e)).collect());

    let mut stages = StageTimings::default();
    let mut records = Vec::with_capacity(results.len());
    for (r, t) in results {
        stages += t;
        records.push(r);
    }

    let t = Instant::now();
    let pairs: Vec<(&str, Vec<&str>)> = records
        .iter()
        .map(|r| (r.prediction.as_str(), r.gold.iter().map(String::as_str).collect()))
        .collect();
    let metrics = score_corpus(&pairs)?;
    let accuracy = if task == TaskKind::Classification {
        let preds: Vec<&str> = records.iter().map(|r| r.prediction.as_str()).collect();
        let golds: Vec<&str> = records.iter().map(|r| r.gold.first().map_or("", String::as_str)).collect();
        Some(classification_accuracy(&preds, &golds)?)
    } else {
        None
    };
    stages.score = t.elapsed();

    let mut warnings = Vec::new();
    if records.is_empty() {
        warnings.push(format!("no test examples for task {}", task.as_str()));
    }
    let n_failed = records.iter().filter(|r| r.failure.is_some()).count();
    if n_failed > 0 {
        warnings.push(format!("{n_failed} example(s) failed and were scored 0"));
    }
    let mut notes = vec![TOP_K_NOTE.to_string()];
    if task == TaskKind::Classification {
        notes.push("classification is reported with both text metrics and accuracy".into());
    }
    let n = records.len();
    let report = TaskReport {
        task,
        config: config.clone(),
        config_hash: config.config_hash(),
        snapshot_id: pipeline.snapshot_id().to_string(),
        knowledge_base: config.knowledge_base,
        n_examples: n,
        n_failed,
        metrics,
        accuracy,
        warnings,
        notes,
        examples: records,
    };
    Ok(TaskRun {
        report,
        timings: TaskTimings::from_stages(start.elapsed(), stages, n),
    })
}
