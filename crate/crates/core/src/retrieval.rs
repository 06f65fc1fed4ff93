//! Cross-modal candidate generation, merge, fused re-ranking and top-K
//! selection over a [`VectorStore`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbedError, Embedder, EmbeddingVector};
use crate::store::{CollectionKind, RankedList, StoreError, VectorStore};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("alpha {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("alpha in (0, 1) needs both query embeddings; the {0} side is missing")]
    MissingModalityEmbedding(CollectionKind),
    #[error("query needs text, an image reference, or both")]
    EmptyQuery,
    #[error("invalid retrieval config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

/// Query with optional text and image parts. Embeddings are filled by
/// [`Query::embed`] or supplied directly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Query {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_embedding: Option<EmbeddingVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_embedding: Option<EmbeddingVector>,
}

fn non_blank(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.trim().is_empty())
}

impl Query {
    /// Blank strings count as absent.
    pub fn new(text: Option<String>, image_ref: Option<String>) -> Self {
        Query {
            text: non_blank(text),
            image_ref: non_blank(image_ref),
            ..Query::default()
        }
    }

    pub fn text(text: impl Into<String>) -> Self {
        Query::new(Some(text.into()), None)
    }

    pub fn image(image_ref: impl Into<String>) -> Self {
        Query::new(None, Some(image_ref.into()))
    }

    pub fn both(text: impl Into<String>, image_ref: impl Into<String>) -> Self {
        Query::new(Some(text.into()), Some(image_ref.into()))
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        let has_text = self.text.is_some() || self.text_embedding.is_some();
        let has_image = self.image_ref.is_some() || self.image_embedding.is_some();
        if has_text || has_image {
            Ok(())
        } else {
            Err(RetrievalError::EmptyQuery)
        }
    }

    /// Embeds whichever parts are present and not yet embedded.
    pub fn embed(&mut self, embedder: &dyn Embedder) -> Result<(), RetrievalError> {
        self.validate()?;
        if self.text_embedding.is_none() {
            if let Some(t) = &self.text {
                self.text_embedding = Some(embedder.embed_text(t)?);
            }
        }
        if self.image_embedding.is_none() {
            if let Some(r) = &self.image_ref {
                self.image_embedding = Some(embedder.embed_image(r)?);
            }
        }
        Ok(())
    }

    fn embedding(&self, kind: CollectionKind) -> Option<&EmbeddingVector> {
        match kind {
            CollectionKind::Image => self.image_embedding.as_ref(),
            CollectionKind::Text => self.text_embedding.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    /// Per-modality candidate count.
    pub tau: usize,
    /// Final candidate count after re-ranking.
    pub top_k: usize,
    pub alpha: f64,
    pub exact_search: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            tau: 50,
            top_k: 1,
            alpha: 0.9,
            exact_search: false,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), RetrievalError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(RetrievalError::AlphaOutOfRange(alpha))
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        check_alpha(self.alpha)?;
        if self.top_k == 0 {
            return Err(RetrievalError::InvalidConfig("top_k must be at least 1".into()));
        }
        if self.top_k > self.tau.saturating_mul(2) {
            return Err(RetrievalError::InvalidConfig(format!(
                "top_k {} exceeds 2 * tau = {}",
                self.top_k,
                self.tau.saturating_mul(2)
            )));
        }
        Ok(())
    }
}

/// `(1 - alpha) * s_t + alpha * s_i`.
pub fn fuse_score(s_t: f64, s_i: f64, alpha: f64) -> Result<f64, RetrievalError> {
    check_alpha(alpha)?;
    Ok((1.0 - alpha) * s_t + alpha * s_i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportingChunk {
    pub entry_id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub record_id: String,
    pub s_t: f64,
    pub s_i: f64,
    pub fused: f64,
    /// Every text chunk of the record, best first.
    pub supporting_chunks: Vec<SupportingChunk>,
}

/// A merged record with the sides that retrieved it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergedCandidate {
    pub record_id: String,
    pub from_text: bool,
    pub from_image: bool,
}

/// Top `tau` entries per modality. A side without a query embedding yields
/// an empty list.
pub fn generate_candidates(
    store: &VectorStore,
    query: &Query,
    tau: usize,
    exact: bool,
) -> Result<(RankedList, RankedList), RetrievalError> {
    let side = |kind| -> Result<RankedList, RetrievalError> {
        match query.embedding(kind) {
            Some(v) if tau > 0 => Ok(store.search(kind, v, tau, exact)?),
            _ => Ok(RankedList::default()),
        }
    };
    Ok((side(CollectionKind::Text)?, side(CollectionKind::Image)?))
}

/// Union of both lists keyed by record id, ascending.
pub fn merge_candidates(r_t: &RankedList, r_i: &RankedList) -> Vec<MergedCandidate> {
    let mut merged: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    for h in r_t.iter() {
        merged.entry(&h.record_id).or_default().0 = true;
    }
    for h in r_i.iter() {
        merged.entry(&h.record_id).or_default().1 = true;
    }
    merged
        .into_iter()
        .map(|(record_id, (from_text, from_image))| MergedCandidate {
            record_id: record_id.to_string(),
            from_text,
            from_image,
        })
        .collect()
}

fn best_similarity(list: &RankedList) -> f64 {
    list.0.first().map_or(0.0, |h| h.similarity)
}

/// Scores every candidate from stored vectors on both sides and keeps the
/// best `k` by `(fused desc, record_id asc)`. A side the query or the record
/// lacks contributes similarity 0.
pub fn rerank(
    store: &VectorStore,
    candidates: &[MergedCandidate],
    query: &Query,
    alpha: f64,
    k: usize,
) -> Result<Vec<RankedCandidate>, RetrievalError> {
    check_alpha(alpha)?;
    if alpha > 0.0 && alpha < 1.0 {
        for kind in [CollectionKind::Text, CollectionKind::Image] {
            if query.embedding(kind).is_none() {
                return Err(RetrievalError::MissingModalityEmbedding(kind));
            }
        }
    }
    let mut out = Vec::with_capacity(candidates.len());
    for c in candidates {
        let chunks = match &query.text_embedding {
            Some(v) => store.score_record(CollectionKind::Text, &c.record_id, v)?,
            None => RankedList::default(),
        };
        let images = match &query.image_embedding {
            Some(v) => store.score_record(CollectionKind::Image, &c.record_id, v)?,
            None => RankedList::default(),
        };
        let s_t = best_similarity(&chunks);
        let s_i = best_similarity(&images);
        out.push(RankedCandidate {
            record_id: c.record_id.clone(),
            s_t,
            s_i,
            fused: fuse_score(s_t, s_i, alpha)?,
            supporting_chunks: chunks
                .0
                .into_iter()
                .map(|h| SupportingChunk {
                    entry_id: h.entry_id,
                    similarity: h.similarity,
                })
                .collect(),
        });
    }
    out.sort_by(|a, b| b.fused.total_cmp(&a.fused).then_with(|| a.record_id.cmp(&b.record_id)));
    out.truncate(k);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalOutcome {
    pub candidates: Vec<RankedCandidate>,
    /// The alpha actually applied.
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Alpha after the single-modality rule: text-only forces 0, image-only 1.
pub fn effective_alpha(query: &Query, alpha: f64) -> (f64, Option<String>) {
    match (query.text_embedding.is_some(), query.image_embedding.is_some()) {
        (true, false) if alpha != 0.0 => (0.0, Some(format!("text-only query: alpha {alpha} forced to 0"))),
        (false, true) if alpha != 1.0 => (1.0, Some(format!("image-only query: alpha {alpha} forced to 1"))),
        _ => (alpha, None),
    }
}

/// Full retrieval over an embedded query.
pub fn retrieve(store: &VectorStore, query: &Query, config: &RetrievalConfig) -> Result<RetrievalOutcome, RetrievalError> {
    config.validate()?;
    if query.text_embedding.is_none() && query.image_embedding.is_none() {
        return Err(RetrievalError::EmptyQuery);
    }
    let (alpha, warning) = effective_alpha(query, config.alpha);
    let (r_t, r_i) = generate_candidates(store, query, config.tau, config.exact_search)?;
    let merged = merge_candidates(&r_t, &r_i);
    let candidates = rerank(store, &merged, query, alpha, config.top_k)?;
    Ok(RetrievalOutcome {
        candidates,
        alpha,
        warnings: warning.into_iter().collect(),
    })
}

/// Embeds the query, then [`retrieve`]s.
pub fn retrieve_with(
    store: &VectorStore,
    embedder: &dyn Embedder,
    query: &Query,
    config: &RetrievalConfig,
) -> Result<RetrievalOutcome, RetrievalError> {
    config.validate()?;
    let mut q = query.clone();
    q.embed(embedder)?;
    retrieve(store, &q, config)
}
