use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::{EmbedError, Embedder, EmbeddingVector};

pub const DEFAULT_TEXT_SALT: &str = "rsrag-text";
pub const DEFAULT_IMAGE_SALT: &str = "rsrag-image";

/// Seeded-hash projection: SHA-256 over (salt, bytes) seeds a ChaCha8 stream
/// of `dim` standard normal draws, then L2-normalise. Pure in (bytes, dim,
/// salt) and stable across platforms.
pub fn mock_embed(bytes: &[u8], dim: usize, salt: &str) -> EmbeddingVector {
    assert!(dim > 0, "mock_embed needs a positive dimension");
    let mut hasher = Sha256::new();
    hasher.update(b"rsrag-mock-v1");
    hasher.update((salt.len() as u64).to_le_bytes());
    hasher.update(salt.as_bytes());
    hasher.update(bytes);
    let seed: [u8; 32] = hasher.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    loop {
        let values: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        // an all-zero draw is practically impossible; keep drawing if it happens
        if let Ok(v) = EmbeddingVector::normalized(values) {
            return v;
        }
    }
}

/// Offline encoder pair. Text is hashed under the text salt; images hash the
/// file bytes when the reference is a readable file and the reference string
/// otherwise.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    dim: usize,
    text_salt: String,
    image_salt: String,
}

impl MockEmbedder {
    pub fn new(dim: usize) -> Self {
        Self::with_salts(dim, DEFAULT_TEXT_SALT, DEFAULT_IMAGE_SALT)
    }

    pub fn with_salts(dim: usize, text_salt: &str, image_salt: &str) -> Self {
        MockEmbedder {
            dim,
            text_salt: text_salt.to_string(),
            image_salt: image_salt.to_string(),
        }
    }
}

impl Embedder for MockEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.trim().is_empty() {
            return Err(EmbedError::EmptyInput);
        }
        Ok(mock_embed(text.as_bytes(), self.dim, &self.text_salt))
    }

    fn embed_image(&self, image_ref: &str) -> Result<EmbeddingVector, EmbedError> {
        if image_ref.trim().is_empty() {
            return Err(EmbedError::UnresolvableRef(image_ref.to_string()));
        }
        let path = Path::new(image_ref);
        let bytes = if path.is_file() {
            std::fs::read(path).map_err(|_| EmbedError::UnresolvableRef(image_ref.to_string()))?
        } else {
            image_ref.as_bytes().to_vec()
        };
        Ok(mock_embed(&bytes, self.dim, &self.image_salt))
    }
}
