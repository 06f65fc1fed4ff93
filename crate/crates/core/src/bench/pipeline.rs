use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{BenchError, PipelineConfig};
use crate::context::{
    build_prompt, fuse_context, ContextError, FusedContext, FusionClient, FusionMode, Prompt, RemoteFusion, Snippet,
};
use crate::embedding::{EmbedError, Embedder};
use crate::generation::{generate, GenerationError, GenerationRequest, Generator};
use crate::http::HttpClient;
use crate::ingest::record_text;
use crate::retrieval::{retrieve, Query, RetrievalError, RetrievalOutcome};
use crate::store::VectorStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Embed,
    Retrieve,
    Fuse,
    Generate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Embed => "embed",
            Stage::Retrieve => "retrieve",
            Stage::Fuse => "fuse",
            Stage::Generate => "generate",
        })
    }
}

/// Who is at fault for a failed stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Input,
    Provider,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: FailureKind,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, kind: FailureKind, message: impl fmt::Display) -> Self {
        PipelineError {
            stage,
            kind,
            message: message.to_string(),
        }
    }

    fn from_embed(e: EmbedError) -> Self {
        let kind = match e {
            EmbedError::ProviderUnavailable(_) | EmbedError::DimensionMismatch { .. } => FailureKind::Provider,
            EmbedError::EmptyInput | EmbedError::UnresolvableRef(_) => FailureKind::Input,
            EmbedError::ZeroVector | EmbedError::InvalidProfile(_) => FailureKind::Internal,
        };
        PipelineError::new(Stage::Embed, kind, e)
    }

    fn from_retrieval(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Embed(e) => PipelineError::from_embed(e),
            RetrievalError::Store(e) => PipelineError::new(Stage::Retrieve, FailureKind::Internal, e),
            other => PipelineError::new(Stage::Retrieve, FailureKind::Input, other),
        }
    }

    fn from_generation(e: GenerationError) -> Self {
        let kind = match e {
            GenerationError::InvalidRequest(_) => FailureKind::Input,
            _ => FailureKind::Provider,
        };
        PipelineError::new(Stage::Generate, kind, e)
    }
}

/// Monotonic per-stage wall-clock totals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub retrieve: Duration,
    pub fuse: Duration,
    pub generate: Duration,
    pub score: Duration,
}

impl std::ops::AddAssign for StageTimings {
    fn add_assign(&mut self, o: Self) {
        self.retrieve += o.retrieve;
        self.fuse += o.fuse;
        self.generate += o.generate;
        self.score += o.score;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub prompt: Prompt,
    pub retrieval: RetrievalOutcome,
    pub context: FusedContext,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub timings: StageTimings,
}

/// Providers and store wired together under one config.
#[derive(Clone)]
pub struct Pipeline {
    store: Arc<VectorStore>,
    snapshot_id: String,
    embedder: Arc<dyn Embedder>,
    generator: Arc<dyn Generator>,
    fusion: Option<Arc<dyn FusionClient>>,
    config: PipelineConfig,
}

impl fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Pipeline")
            .field("snapshot_id", &self.snapshot_id)
            .field("generator", &self.generator.name())
            .field("config", &self.config)
            .finish()
    }
}

impl Pipeline {
    pub fn new(
        store: Arc<VectorStore>,
        embedder: Arc<dyn Embedder>,
        generator: Arc<dyn Generator>,
        fusion: Option<Arc<dyn FusionClient>>,
        config: PipelineConfig,
    ) -> Result<Self, BenchError> {
        config.validate()?;
        if embedder.dim() != store.dim() {
            return Err(BenchError::ConfigInvalid(format!(
                "embedder dim {} does not match store dim {}",
                embedder.dim(),
                store.dim()
            )));
        }
        let snapshot_id = store.snapshot_id().map_err(|e| BenchError::Internal(e.to_string()))?;
        Ok(Pipeline {
            store,
            snapshot_id,
            embedder,
            generator,
            fusion,
            config,
        })
    }

    /// Builds providers from the profiles in `config`. Model fusion uses
    /// `fusion_endpoint` or `RSRAG_LLM_URL`.
    pub fn from_config(store: Arc<VectorStore>, config: PipelineConfig) -> Result<Self, BenchError> {
        let embedder = config.embedder.build().map_err(|e| BenchError::ConfigInvalid(e.to_string()))?;
        let generator = config.generator.build().map_err(|e| BenchError::ConfigInvalid(e.to_string()))?;
        let fusion: Option<Arc<dyn FusionClient>> = match (&config.fusion_endpoint, config.fusion_mode) {
            (Some(url), _) => Some(Arc::new(RemoteFusion::new(url.clone(), HttpClient::from_env()))),
            (None, FusionMode::Model) => RemoteFusion::from_env().map(|f| Arc::new(f) as Arc<dyn FusionClient>),
            (None, FusionMode::Deterministic) => None,
        };
        Pipeline::new(store, embedder, generator, fusion, config)
    }

    /// Same providers and store, different config.
    pub fn with_config(&self, config: PipelineConfig) -> Result<Self, BenchError> {
        config.validate()?;
        Ok(Pipeline {
            config,
            ..self.clone()
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn store(&self) -> &VectorStore {
        &self.store
    }

    pub fn snapshot_id(&self) -> &str {
        &self.snapshot_id
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn retrieve(&self, query: &Query) -> Result<RetrievalOutcome, PipelineError> {
        let mut q = query.clone();
        q.embed(self.embedder.as_ref()).map_err(PipelineError::from_retrieval)?;
        retrieve(&self.store, &q, &self.config.retrieval()).map_err(PipelineError::from_retrieval)
    }

    /// Knowledge snippets of the retrieved records, in rank order.
    pub fn snippets(&self, outcome: &RetrievalOutcome) -> Vec<Snippet> {
        outcome
            .candidates
            .iter()
            .map(|c| {
                let (text, chunk_ids) = record_text(&self.store, &c.record_id);
                Snippet {
                    record_id: c.record_id.clone(),
                    fused: c.fused,
                    text,
                    chunk_ids,
                }
            })
            .collect()
    }

    /// Model fusion falls back to deterministic fusion when the provider
    /// fails; the fallback is reported in `warnings`.
    fn fuse(&self, snippets: &[Snippet], warnings: &mut Vec<String>) -> Result<FusedContext, PipelineError> {
        let cap = self.config.fusion_cap;
        let first = fuse_context(snippets, self.config.fusion_mode, self.fusion.as_deref(), cap);
        match first {
            Err(ContextError::ProviderUnavailable(msg)) => {
                warnings.push(format!("model fusion unavailable ({msg}); used deterministic fusion"));
                fuse_context(snippets, FusionMode::Deterministic, None, cap)
            }
            other => other,
        }
        .map_err(|e| PipelineError::new(Stage::Fuse, FailureKind::Internal, e))
    }

    /// Retrieve, fuse, prompt and generate for one query.
    pub fn answer(&self, query: &Query) -> Result<Answer, PipelineError> {
        query.validate().map_err(PipelineError::from_retrieval)?;
        let mut timings = StageTimings::default();
        let t = Instant::now();
        let retrieval = self.retrieve(query)?;
        timings.retrieve = t.elapsed();

        let t = Instant::now();
        let mut warnings = retrieval.warnings.clone();
        let snippets = self.snippets(&retrieval);
        if snippets.is_empty() {
            return Err(PipelineError::new(Stage::Retrieve, FailureKind::Internal, "no knowledge retrieved"));
        }
        let context = self.fuse(&snippets, &mut warnings)?;
        let prompt = build_prompt(
            &self.config.instruction,
            query.text.as_deref().unwrap_or(""),
            &self.config.knowledge_header,
            &context,
        );
        timings.fuse = t.elapsed();

        let t = Instant::now();
        let request = GenerationRequest {
            image_ref: query.image_ref.clone(),
            prompt: prompt.clone(),
            max_tokens: self.config.max_tokens,
            temperature: self.config.temperature,
        };
        let text = generate(&request, self.generator.as_ref()).map_err(PipelineError::from_generation)?;
        timings.generate = t.elapsed();
        Ok(Answer {
            text,
            prompt,
            retrieval,
            context,
            warnings,
            timings,
        })
    }
}
