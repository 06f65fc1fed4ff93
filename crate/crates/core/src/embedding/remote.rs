use std::path::Path;

use base64::Engine as _;
use serde::{Deserialize, Serialize};

use super::{EmbedError, Embedder, EmbeddingVector};
use crate::http::HttpClient;

const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEmbedRequest {
    /// `"text"` or `"image"`.
    pub kind: String,
    pub items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

/// Client for an encoder service speaking the batch embed wire format.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    endpoint: String,
    dim: usize,
    client: HttpClient,
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>, dim: usize, client: HttpClient) -> Self {
        RemoteEmbedder {
            endpoint: endpoint.into(),
            dim,
            client,
        }
    }

    fn request(&self, kind: &str, items: Vec<String>) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let expected = items.len();
        let req = WireEmbedRequest {
            kind: kind.to_string(),
            items,
        };
        let resp: WireEmbedResponse = self.client.post_json(&self.endpoint, &req)?;
        if resp.dim != self.dim {
            return Err(EmbedError::DimensionMismatch {
                expected: self.dim,
                got: resp.dim,
            });
        }
        if resp.vectors.len() != expected {
            return Err(EmbedError::ProviderUnavailable(format!(
                "expected {expected} vectors, got {}",
                resp.vectors.len()
            )));
        }
        // validate the whole batch before returning anything
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(EmbedError::DimensionMismatch {
                        expected: self.dim,
                        got: v.len(),
                    });
                }
                EmbeddingVector::normalized(v)
            })
            .collect()
    }

    fn batched(&self, kind: &str, items: Vec<String>) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let mut out = Vec::with_capacity(items.len());
        for batch in items.chunks(BATCH) {
            out.extend(self.request(kind, batch.to_vec())?);
        }
        Ok(out)
    }
}

/// URIs with a scheme are passed through; local files are sent as base64.
pub fn encode_image_ref(image_ref: &str) -> Result<String, EmbedError> {
    if image_ref.contains("://") {
        return Ok(image_ref.to_string());
    }
    let path = Path::new(image_ref);
    let bytes = std::fs::read(path).map_err(|_| EmbedError::UnresolvableRef(image_ref.to_string()))?;
    Ok(base64::engine::general_purpose::STANDARD.encode(bytes))
}

impl Embedder for RemoteEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        self.embed_texts(&[text.to_string()])?
            .pop()
            .ok_or_else(|| EmbedError::ProviderUnavailable("empty response".into()))
    }

    fn embed_image(&self, image_ref: &str) -> Result<EmbeddingVector, EmbedError> {
        self.embed_images(&[image_ref.to_string()])?
            .pop()
            .ok_or_else(|| EmbedError::ProviderUnavailable("empty response".into()))
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyInput);
        }
        self.batched("text", texts.to_vec())
    }

    fn embed_images(&self, refs: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let items = refs
            .iter()
            .map(|r| encode_image_ref(r))
            .collect::<Result<Vec<_>, _>>()?;
        self.batched("image", items)
    }
}
