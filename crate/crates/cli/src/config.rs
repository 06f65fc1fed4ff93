//! Pipeline flags shared by every subcommand. Precedence, lowest first:
//! task preset, embedder recorded in the snapshot (or the environment),
//! `--config` file, individual flags.

use std::path::{Path, PathBuf};

use clap::Args;
use rsrag_core::bench::{recorded_embedder, KnowledgeBase, PipelineConfig};
use rsrag_core::context::FusionMode;
use rsrag_core::embedding::EmbedderProfile;
use rsrag_core::generation::{GeneratorKind, GeneratorProfile};
use rsrag_core::knowledge::TaskKind;
use rsrag_core::store::{AnnParams, VectorStore};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file with (a subset of) the pipeline config keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Per-modality candidate count.
    #[arg(long)]
    pub tau: Option<usize>,
    /// Records kept after re-ranking.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// Image weight of the fused score, in [0, 1].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Full scan instead of the ANN index.
    #[arg(long)]
    pub exact_search: bool,
    #[arg(long)]
    pub chunk_budget: Option<usize>,
    #[arg(long, value_parser = ["deterministic", "model"])]
    pub fusion_mode: Option<String>,
    #[arg(long)]
    pub fusion_cap: Option<usize>,
    /// Fusion endpoint; `RSRAG_LLM_URL` is used when unset.
    #[arg(long)]
    pub fusion_url: Option<String>,
    #[arg(long)]
    pub instruction: Option<String>,
    #[arg(long)]
    pub knowledge_header: Option<String>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Remote encoder endpoint; switches the embedder to remote.
    #[arg(long)]
    pub embedder_url: Option<String>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long, value_parser = ["echo", "label", "remote"])]
    pub generator: Option<String>,
    /// Generator endpoint; `RSRAG_VLM_URL` is used when unset.
    #[arg(long)]
    pub generator_url: Option<String>,
    #[arg(long, value_parser = ["full", "train"])]
    pub knowledge_base: Option<String>,
    /// Evaluation worker threads; 0 means one per core.
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AnnArgs {
    #[arg(long)]
    pub hnsw_m: Option<usize>,
    #[arg(long)]
    pub ef_construction: Option<usize>,
    #[arg(long)]
    pub ef_search: Option<usize>,
}

impl AnnArgs {
    pub fn params(&self, base: AnnParams) -> AnnParams {
        AnnParams {
            m: self.hnsw_m.unwrap_or(base.m),
            ef_construction: self.ef_construction.unwrap_or(base.ef_construction),
            ef_search: self.ef_search.unwrap_or(base.ef_search),
            ..base
        }
    }
}

fn enum_value<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, CliError> {
    serde_json::from_value(Value::String(s.to_string())).map_err(|e| CliError::input("ConfigInvalid", e))
}

impl ConfigArgs {
    /// Resolves the effective config for `task`, taking the embedder from
    /// `store` when the snapshot recorded one.
    pub fn resolve(&self, task: TaskKind, store: Option<&VectorStore>) -> Result<PipelineConfig, CliError> {
        let mut cfg = PipelineConfig::for_task(task);
        cfg.embedder = store.and_then(recorded_embedder).unwrap_or_else(EmbedderProfile::from_env);
        if let Some(path) = &self.config {
            cfg = overlay_file(&cfg, path)?;
        }
        let a = self;
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = a.$field.clone() {
                    cfg.$field = v;
                }
            };
        }
        set!(tau);
        set!(top_k);
        set!(alpha);
        set!(chunk_budget);
        set!(fusion_cap);
        set!(instruction);
        set!(knowledge_header);
        set!(max_tokens);
        set!(temperature);
        set!(parallelism);
        set!(seed);
        if a.exact_search {
            cfg.exact_search = true;
        }
        if let Some(m) = &a.fusion_mode {
            cfg.fusion_mode = enum_value::<FusionMode>(m)?;
        }
        if let Some(u) = &a.fusion_url {
            cfg.fusion_endpoint = Some(u.clone());
        }
        if let Some(u) = &a.embedder_url {
            cfg.embedder = EmbedderProfile::remote(u.clone(), a.embed_dim.unwrap_or(cfg.embedder.dim));
        } else if let Some(d) = a.embed_dim {
            cfg.embedder.dim = d;
        }
        if let Some(g) = &a.generator {
            cfg.generator = GeneratorProfile {
                kind: enum_value::<GeneratorKind>(g)?,
                endpoint: a.generator_url.clone(),
            };
        } else if let Some(u) = &a.generator_url {
            cfg.generator = GeneratorProfile::remote(u.clone());
        }
        if let Some(kb) = &a.knowledge_base {
            cfg.knowledge_base = enum_value::<KnowledgeBase>(kb)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn overlay_file(cfg: &PipelineConfig, path: &Path) -> Result<PipelineConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    let overlay: Value = serde_json::from_str(&text).map_err(|e| CliError::input("ConfigInvalid", e))?;
    Ok(cfg.with_overrides(&overlay)?)
}
