//! Vision-language generation behind a provider trait, plus two offline
//! mocks: one echoes the retrieved context, one extracts a category label.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::Prompt;
use crate::embedding::encode_image_ref;
use crate::http::HttpClient;
use crate::knowledge::Category;
use crate::metrics::{token_count, tokenize};

pub const DEFAULT_MAX_TOKENS: usize = 2048;

#[derive(Debug, Error)]
pub enum GenerationError {
    #[error("generation provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("generated {got} tokens, limit is {max}")]
    ContentLengthExceeded { max: usize, got: usize },
    #[error("generator returned empty text")]
    EmptyResponse,
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub image_ref: Option<String>,
    pub prompt: Prompt,
    pub max_tokens: usize,
    pub temperature: f64,
}

impl GenerationRequest {
    pub fn new(image_ref: Option<String>, prompt: Prompt) -> Self {
        GenerationRequest {
            image_ref,
            prompt,
            max_tokens: DEFAULT_MAX_TOKENS,
            temperature: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GenerationError> {
        if self.max_tokens == 0 {
            return Err(GenerationError::InvalidRequest("max_tokens must be positive".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(GenerationError::InvalidRequest("temperature must be >= 0".into()));
        }
        Ok(())
    }
}

pub trait Generator: Send + Sync {
    fn name(&self) -> &str;

    fn complete(&self, request: &GenerationRequest) -> Result<String, GenerationError>;
}

/// Runs `provider` and enforces the output contract: non-empty and at most
/// `max_tokens` tokens.
pub fn generate(request: &GenerationRequest, provider: &dyn Generator) -> Result<String, GenerationError> {
    request.validate()?;
    let text = provider.complete(request)?;
    if text.trim().is_empty() {
        return Err(GenerationError::EmptyResponse);
    }
    let got = token_count(&text);
    if got > request.max_tokens {
        return Err(GenerationError::ContentLengthExceeded {
            max: request.max_tokens,
            got,
        });
    }
    Ok(text)
}

/// Returns the context segment of the prompt verbatim.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoGenerator;

impl Generator for EchoGenerator {
    fn name(&self) -> &str {
        "echo"
    }

    fn complete(&self, request: &GenerationRequest) -> Result<String, GenerationError> {
        Ok(request.prompt.context.clone())
    }
}

pub const UNKNOWN_LABEL: &str = "unknown";

/// Returns the category label occurring earliest in the context (longest
/// label on a tie), or [`UNKNOWN_LABEL`].
#[derive(Debug, Clone)]
pub struct LabelGenerator {
    labels: Vec<(Vec<String>, Category)>,
}

impl Default for LabelGenerator {
    fn default() -> Self {
        let mut labels: Vec<(Vec<String>, Category)> =
            Category::ALL.iter().map(|&c| (tokenize(c.label()), c)).collect();
        labels.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.1.cmp(&b.1)));
        LabelGenerator { labels }
    }
}

impl LabelGenerator {
    pub fn extract(&self, text: &str) -> Option<Category> {
        let tokens = tokenize(text);
        (0..tokens.len()).find_map(|i| {
            self.labels
                .iter()
                .find(|(l, _)| tokens[i..].starts_with(l))
                .map(|&(_, c)| c)
        })
    }
}

impl Generator for LabelGenerator {
    fn name(&self) -> &str {
        "label"
    }

    fn complete(&self, request: &GenerationRequest) -> Result<String, GenerationError> {
        Ok(self
            .extract(&request.prompt.context)
            .map_or(UNKNOWN_LABEL, |c| c.label())
            .to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireGenerateRequest {
    pub image: Option<String>,
    pub prompt: String,
    pub max_tokens: usize,
    pub temperature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireGenerateResponse {
    pub text: String,
}

#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    endpoint: String,
    client: HttpClient,
}

impl RemoteGenerator {
    pub fn new(endpoint: impl Into<String>, client: HttpClient) -> Self {
        RemoteGenerator {
            endpoint: endpoint.into(),
            client,
        }
    }
}

impl Generator for RemoteGenerator {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &GenerationRequest) -> Result<String, GenerationError> {
        let image = match &request.image_ref {
            Some(r) => Some(encode_image_ref(r).map_err(|e| GenerationError::InvalidRequest(e.to_string()))?),
            None => None,
        };
        let wire = WireGenerateRequest {
            image,
            prompt: request.prompt.rendered.clone(),
            max_tokens: request.max_tokens,
            temperature: request.temperature,
        };
        let resp: WireGenerateResponse = self
            .client
            .post_json(&self.endpoint, &wire)
            .map_err(|e| GenerationError::ProviderUnavailable(e.to_string()))?;
        Ok(resp.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Echo,
    Label,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorProfile {
    pub kind: GeneratorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

impl GeneratorProfile {
    pub fn echo() -> Self {
        GeneratorProfile {
            kind: GeneratorKind::Echo,
            endpoint: None,
        }
    }

    pub fn label() -> Self {
        GeneratorProfile {
            kind: GeneratorKind::Label,
            endpoint: None,
        }
    }

    pub fn remote(endpoint: impl Into<String>) -> Self {
        GeneratorProfile {
            kind: GeneratorKind::Remote,
            endpoint: Some(endpoint.into()),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Generator>, GenerationError> {
        Ok(match self.kind {
            GeneratorKind::Echo => Arc::new(EchoGenerator),
            GeneratorKind::Label => Arc::new(LabelGenerator::default()),
            GeneratorKind::Remote => {
                let url = self
                    .endpoint
                    .clone()
                    .filter(|u| !u.trim().is_empty())
                    .or_else(|| std::env::var("RSRAG_VLM_URL").ok().filter(|u| !u.trim().is_empty()))
                    .ok_or_else(|| GenerationError::ProviderUnavailable("no endpoint and RSRAG_VLM_URL unset".into()))?;
                Arc::new(RemoteGenerator::new(url, HttpClient::from_env()))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::{build_prompt, FusedContext, FusionMode};

    fn req(context: &str) -> GenerationRequest {
        let ctx = FusedContext {
            text: context.into(),
            source_records: vec![],
            fusion_mode: FusionMode::Deterministic,
        };
        GenerationRequest::new(None, build_prompt("Do it:", "q", "Retrieved context:", &ctx))
    }

    #[test]
    fn echo_returns_context() {
        assert_eq!(generate(&req("Name: X\nCategory: Park"), &EchoGenerator).unwrap(), "Name: X\nCategory: Park");
        assert!(matches!(generate(&req(""), &EchoGenerator), Err(GenerationError::EmptyResponse)));
    }

    #[test]
    fn label_mock_picks_first_label() {
        let g = LabelGenerator::default();
        assert_eq!(generate(&req("Name: Old Mill\nCategory: Historic Site\nnear a Park"), &g).unwrap(), "Historic Site");
        assert_eq!(generate(&req("amusement park rides"), &g).unwrap(), "Amusement Park");
        assert_eq!(generate(&req("nothing relevant"), &g).unwrap(), "unknown");
    }

    #[test]
    fn length_limit_enforced() {
        let mut r = req("one two three");
        r.max_tokens = 2;
        assert!(matches!(
            generate(&r, &EchoGenerator),
            Err(GenerationError::ContentLengthExceeded { max: 2, got: 3 })
        ));
        r.max_tokens = 0;
        assert!(matches!(generate(&r, &EchoGenerator), Err(GenerationError::InvalidRequest(_))));
    }

    #[test]
    fn remote_timeout_is_provider_unavailable() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let port = listener.local_addr().unwrap().port();
        drop(listener);
        let g = RemoteGenerator::new(
            format!("http://127.0.0.1:{port}/generate"),
            HttpClient::new(std::time::Duration::from_millis(200), 1).with_backoff(std::time::Duration::ZERO),
        );
        assert!(matches!(generate(&req("x"), &g), Err(GenerationError::ProviderUnavailable(_))));
    }
}
