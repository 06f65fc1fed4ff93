//! Image and text encoders mapping into one shared unit-norm space.
//!
//! Every vector leaving this module is L2-normalised, so cosine similarity
//! equals the dot product everywhere downstream.

mod mock;
mod remote;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{HttpClient, HttpError};

pub use mock::{mock_embed, MockEmbedder, DEFAULT_IMAGE_SALT, DEFAULT_TEXT_SALT};
pub use remote::{encode_image_ref, RemoteEmbedder, WireEmbedRequest, WireEmbedResponse};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("empty input")]
    EmptyInput,
    #[error("cannot resolve image reference {0:?}")]
    UnresolvableRef(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero or non-finite vector cannot be normalised")]
    ZeroVector,
    #[error("invalid embedder profile: {0}")]
    InvalidProfile(String),
}

impl From<HttpError> for EmbedError {
    fn from(e: HttpError) -> Self {
        EmbedError::ProviderUnavailable(e.to_string())
    }
}

/// Unit-norm dense vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// L2-normalises `values`.
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbedError> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) || values.is_empty() {
            return Err(EmbedError::ZeroVector);
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Ok(EmbeddingVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// An encoder pair sharing one output dimension.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;

    fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_image(&self, image_ref: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed_text(t)).collect()
    }

    fn embed_images(&self, refs: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        refs.iter().map(|r| self.embed_image(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Mock,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedderProfile {
    pub provider: ProviderKind,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model_tag: String,
    #[serde(default = "default_text_salt")]
    pub text_salt: String,
    #[serde(default = "default_image_salt")]
    pub image_salt: String,
}

fn default_text_salt() -> String {
    DEFAULT_TEXT_SALT.to_string()
}

fn default_image_salt() -> String {
    DEFAULT_IMAGE_SALT.to_string()
}

pub const DEFAULT_DIM: usize = 64;

impl EmbedderProfile {
    pub fn mock(dim: usize) -> Self {
        EmbedderProfile {
            provider: ProviderKind::Mock,
            dim,
            endpoint: None,
            model_tag: "mock-hash-v1".into(),
            text_salt: default_text_salt(),
            image_salt: default_image_salt(),
        }
    }

    pub fn remote(endpoint: impl Into<String>, dim: usize) -> Self {
        EmbedderProfile {
            provider: ProviderKind::Remote,
            dim,
            endpoint: Some(endpoint.into()),
            model_tag: "remote".into(),
            text_salt: default_text_salt(),
            image_salt: default_image_salt(),
        }
    }

    /// Remote when `RSRAG_EMBEDDER_URL` is set, mock otherwise; dimension
    /// from `RSRAG_EMBED_DIM`.
    pub fn from_env() -> Self {
        let dim = std::env::var("RSRAG_EMBED_DIM")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_DIM);
        match std::env::var("RSRAG_EMBEDDER_URL") {
            Ok(url) if !url.trim().is_empty() => EmbedderProfile::remote(url, dim),
            _ => EmbedderProfile::mock(dim),
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::InvalidProfile("dim must be positive".into()));
        }
        if self.provider == ProviderKind::Remote && self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
            return Err(EmbedError::InvalidProfile("remote profile needs an endpoint".into()));
        }
        Ok(())
    }

    pub fn build(&self) -> Result<Arc<dyn Embedder>, EmbedError> {
        self.validate()?;
        Ok(match self.provider {
            ProviderKind::Mock => Arc::new(MockEmbedder::with_salts(self.dim, &self.text_salt, &self.image_salt)),
            ProviderKind::Remote => Arc::new(RemoteEmbedder::new(
                self.endpoint.clone().unwrap_or_default(),
                self.dim,
                HttpClient::from_env(),
            )),
        })
    }
}

pub fn embed_text(text: &str, profile: &EmbedderProfile) -> Result<EmbeddingVector, EmbedError> {
    profile.build()?.embed_text(text)
}

pub fn embed_image(image_ref: &str, profile: &EmbedderProfile) -> Result<EmbeddingVector, EmbedError> {
    profile.build()?.embed_image(image_ref)
}
