use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{chunk::sentence_segments, ContextError};
use crate::http::HttpClient;
use crate::metrics::{token_spans, tokenize};

/// Token cap on a fused context.
pub const DEFAULT_FUSION_CAP: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    Model,
    #[default]
    Deterministic,
}

/// Knowledge of one retrieved record, in fused-score order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snippet {
    pub record_id: String,
    pub fused: f64,
    pub text: String,
    #[serde(default)]
    pub chunk_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub record_id: String,
    pub fused: f64,
    #[serde(default)]
    pub chunk_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedContext {
    pub text: String,
    pub source_records: Vec<SourceRecord>,
    pub fusion_mode: FusionMode,
}

/// External consolidator of retrieved snippets.
pub trait FusionClient: Send + Sync {
    fn fuse(&self, snippets: &[String], max_tokens: usize) -> Result<String, ContextError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireFusionRequest {
    pub snippets: Vec<String>,
    pub max_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireFusionResponse {
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct RemoteFusion {
    endpoint: String,
    client: HttpClient,
}

impl RemoteFusion {
    pub fn new(endpoint: impl Into<String>, client: HttpClient) -> Self {
        RemoteFusion {
            endpoint: endpoint.into(),
            client,
        }
    }

    /// From `RSRAG_LLM_URL`, if set.
    pub fn from_env() -> Option<Self> {
        std::env::var("RSRAG_LLM_URL")
            .ok()
            .filter(|u| !u.trim().is_empty())
            .map(|u| RemoteFusion::new(u, HttpClient::from_env()))
    }
}

impl FusionClient for RemoteFusion {
    fn fuse(&self, snippets: &[String], max_tokens: usize) -> Result<String, ContextError> {
        let req = WireFusionRequest {
            snippets: snippets.to_vec(),
            max_tokens,
        };
        let resp: WireFusionResponse = self
            .client
            .post_json(&self.endpoint, &req)
            .map_err(|e| ContextError::ProviderUnavailable(e.to_string()))?;
        Ok(resp.text)
    }
}

/// Offline fusion client: joins the snippets with newlines and truncates to
/// the token cap.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConcatFusion;

impl FusionClient for ConcatFusion {
    fn fuse(&self, snippets: &[String], max_tokens: usize) -> Result<String, ContextError> {
        Ok(truncate_tokens(&snippets.join("\n"), max_tokens).to_string())
    }
}

/// Prefix of `text` ending with its `max_tokens`-th token; `text` itself
/// when it has no more tokens than that.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    if max_tokens == 0 {
        return "";
    }
    match token_spans(text).nth(max_tokens) {
        Some(_) => {
            let (_, end) = token_spans(text).nth(max_tokens - 1).expect("earlier token exists");
            &text[..end]
        }
        None => text,
    }
}

fn sentence_key(s: &str) -> String {
    tokenize(s).join(" ")
}

fn deterministic(snippets: &[Snippet], cap: usize) -> String {
    let mut seen: HashSet<String> = HashSet::new();
    let mut parts: Vec<String> = Vec::with_capacity(snippets.len());
    for s in snippets {
        let segments: Vec<&str> = sentence_segments(&s.text).into_iter().map(|(a, b)| &s.text[a..b]).collect();
        // only sentences from earlier snippets count as duplicates
        let kept: String = segments
            .iter()
            .filter(|seg| {
                let k = sentence_key(seg);
                k.is_empty() || !seen.contains(&k)
            })
            .copied()
            .collect();
        for seg in &segments {
            let k = sentence_key(seg);
            if !k.is_empty() {
                seen.insert(k);
            }
        }
        if !kept.trim().is_empty() {
            parts.push(kept);
        }
    }
    truncate_tokens(&parts.join("\n"), cap).to_string()
}

/// Consolidates snippets into one context. Deterministic mode drops
/// sentences already seen in an earlier snippet, joins the rest with
/// newlines in score order and caps the result at `cap` tokens; model mode
/// sends all snippet texts to `client` in one request.
pub fn fuse_context(
    snippets: &[Snippet],
    mode: FusionMode,
    client: Option<&dyn FusionClient>,
    cap: usize,
) -> Result<FusedContext, ContextError> {
    if snippets.is_empty() {
        return Err(ContextError::EmptyInput);
    }
    let text = match mode {
        FusionMode::Deterministic => deterministic(snippets, cap),
        FusionMode::Model => {
            let client = client.ok_or_else(|| ContextError::ProviderUnavailable("no fusion client configured".into()))?;
            let texts: Vec<String> = snippets.iter().map(|s| s.text.clone()).collect();
            truncate_tokens(&client.fuse(&texts, cap)?, cap).to_string()
        }
    };
    Ok(FusedContext {
        text,
        source_records: snippets
            .iter()
            .map(|s| SourceRecord {
                record_id: s.record_id.clone(),
                fused: s.fused,
                chunk_ids: s.chunk_ids.clone(),
            })
            .collect(),
        fusion_mode: mode,
    })
}
