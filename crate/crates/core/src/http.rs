//! Blocking JSON-over-HTTP client with a bounded retry budget, shared by the
//! remote embedder, fusion and generation providers.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const DEFAULT_TIMEOUT_MS: u64 = 30_000;
pub const DEFAULT_RETRIES: u32 = 2;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("{url} unavailable after {attempts} attempt(s): {last}")]
    Unavailable { url: String, attempts: u32, last: String },
    #[error("{url} rejected the request with status {status}: {body}")]
    Rejected { url: String, status: u16, body: String },
    #[error("malformed response from {url}: {reason}")]
    Malformed { url: String, reason: String },
}

#[derive(Debug, Clone)]
pub struct HttpClient {
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
}

impl HttpClient {
    pub fn new(timeout: Duration, retries: u32) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpClient {
            agent,
            retries,
            backoff: Duration::from_millis(50),
        }
    }

    /// Timeout from `RSRAG_HTTP_TIMEOUT_MS` when set.
    pub fn from_env() -> Self {
        let ms = std::env::var("RSRAG_HTTP_TIMEOUT_MS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_TIMEOUT_MS);
        HttpClient::new(Duration::from_millis(ms), DEFAULT_RETRIES)
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    /// POSTs `body` as JSON. Transport failures and 5xx responses are retried
    /// up to the budget with the same idempotency key; 4xx are returned at
    /// once.
    pub fn post_json<Req: Serialize, Resp: DeserializeOwned>(&self, url: &str, body: &Req) -> Result<Resp, HttpError> {
        let payload = serde_json::to_vec(body).map_err(|e| HttpError::Malformed {
            url: url.to_string(),
            reason: e.to_string(),
        })?;
        let key = hex::encode(Sha256::digest(&payload));
        let attempts = self.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * attempt);
            }
            let result = self
                .agent
                .post(url)
                .header("Content-Type", "application/json")
                .header("Idempotency-Key", &key)
                .send(&payload[..]);
            let mut resp = match result {
                Ok(r) => r,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = match resp.body_mut().read_to_string() {
                Ok(t) => t,
                Err(e) => {
                    last = e.to_string();
                    continue;
                }
            };
            if status >= 500 {
                last = format!("status {status}");
                continue;
            }
            if status >= 400 {
                return Err(HttpError::Rejected {
                    url: url.to_string(),
                    status,
                    body: text,
                });
            }
            return serde_json::from_str(&text).map_err(|e| HttpError::Malformed {
                url: url.to_string(),
                reason: e.to_string(),
            });
        }
        Err(HttpError::Unavailable {
            url: url.to_string(),
            attempts,
            last,
        })
    }
}
