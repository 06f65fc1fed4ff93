use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::BenchError;
use crate::context::{FusionMode, TaskPreset, DEFAULT_CHUNK_BUDGET, DEFAULT_FUSION_CAP, MIN_CHUNK_BUDGET};
use crate::embedding::EmbedderProfile;
use crate::generation::{GeneratorProfile, DEFAULT_MAX_TOKENS};
use crate::knowledge::TaskKind;
use crate::retrieval::RetrievalConfig;

/// Which records the store was built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeBase {
    /// Every record, including those of test examples.
    #[default]
    Full,
    /// Only records referenced by train examples.
    Train,
}

/// Everything that determines a pipeline run. Serialised into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub tau: usize,
    pub top_k: usize,
    pub alpha: f64,
    pub exact_search: bool,
    pub chunk_budget: usize,
    pub fusion_mode: FusionMode,
    pub fusion_cap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion_endpoint: Option<String>,
    pub instruction: String,
    pub knowledge_header: String,
    pub max_tokens: usize,
    pub temperature: f64,
    pub embedder: EmbedderProfile,
    pub generator: GeneratorProfile,
    pub knowledge_base: KnowledgeBase,
    /// Worker threads for example evaluation; 0 means one per core.
    pub parallelism: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::for_task(TaskKind::Captioning)
    }
}

impl PipelineConfig {
    /// Offline preset for `task`: mock embedder, echo generator (label
    /// generator for classification), deterministic fusion.
    pub fn for_task(task: TaskKind) -> Self {
        let preset = TaskPreset::for_task(task);
        let defaults = RetrievalConfig::default();
        PipelineConfig {
            tau: defaults.tau,
            top_k: defaults.top_k,
            alpha: preset.alpha,
            exact_search: defaults.exact_search,
            chunk_budget: DEFAULT_CHUNK_BUDGET,
            fusion_mode: FusionMode::Deterministic,
            fusion_cap: DEFAULT_FUSION_CAP,
            fusion_endpoint: None,
            instruction: preset.instruction,
            knowledge_header: preset.knowledge_header,
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: 0.0,
            embedder: EmbedderProfile::mock(crate::embedding::DEFAULT_DIM),
            generator: match task {
                TaskKind::Classification => GeneratorProfile::label(),
                _ => GeneratorProfile::echo(),
            },
            knowledge_base: KnowledgeBase::Full,
            parallelism: 0,
            seed: 0,
        }
    }

    pub fn retrieval(&self) -> RetrievalConfig {
        RetrievalConfig {
            tau: self.tau,
            top_k: self.top_k,
            alpha: self.alpha,
            exact_search: self.exact_search,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::ConfigInvalid(m));
        if let Err(e) = self.retrieval().validate() {
            return bad(e.to_string());
        }
        if self.chunk_budget < MIN_CHUNK_BUDGET {
            return bad(format!("chunk_budget must be at least {MIN_CHUNK_BUDGET}"));
        }
        if self.max_tokens == 0 || self.fusion_cap == 0 {
            return bad("max_tokens and fusion_cap must be positive".into());
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return bad("temperature must be >= 0".into());
        }
        if self.instruction.trim().is_empty() || self.knowledge_header.trim().is_empty() {
            return bad("instruction and knowledge_header must be non-empty".into());
        }
        if let Err(e) = self.embedder.validate() {
            return bad(e.to_string());
        }
        Ok(())
    }

    /// Overlays a (partial) JSON object onto this config; nested objects
    /// merge key by key. The result is validated.
    pub fn with_overrides(&self, overrides: &serde_json::Value) -> Result<Self, BenchError> {
        fn merge(base: &mut serde_json::Value, overlay: &serde_json::Value) {
            match (base, overlay) {
                (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
                    for (k, v) in o {
                        merge(b.entry(k.clone()).or_insert(serde_json::Value::Null), v);
                    }
                }
                (slot, v) => *slot = v.clone(),
            }
        }
        if !overrides.is_object() {
            return Err(BenchError::ConfigInvalid("config overrides must be a JSON object".into()));
        }
        let mut base = serde_json::to_value(self)?;
        merge(&mut base, overrides);
        let cfg: PipelineConfig = serde_json::from_value(base).map_err(|e| BenchError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }
}
