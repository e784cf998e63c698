//! Client for an external embedding service.
//!
//! Wire format: `POST {"texts": [...]}` answered by `{"embeddings": [[...], ...]}`
//! in request order. Large inputs are split into batches that are sent
//! concurrently, with the number of in-flight requests capped across all
//! callers sharing the provider.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::embedding::{ensure_non_empty, EmbeddingProvider, EmbeddingVector};
use crate::error::{Error, Result};

/// Environment variable holding the bearer token for the embedding service.
pub const TOKEN_ENV: &str = "TRAITQA_EMBEDDING_TOKEN";

#[derive(Debug, Clone)]
pub struct HttpProviderConfig {
    pub endpoint: String,
    pub token: Option<String>,
    pub batch_size: usize,
    pub max_in_flight: usize,
    /// Total attempts per request, including the first.
    pub attempts: u32,
    pub timeout: Duration,
    pub backoff: Duration,
}

impl HttpProviderConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        HttpProviderConfig {
            endpoint: endpoint.into(),
            token: None,
            batch_size: 64,
            max_in_flight: 4,
            attempts: 3,
            timeout: Duration::from_secs(60),
            backoff: Duration::from_millis(200),
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    embeddings: Vec<EmbeddingVector>,
}

struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

impl Permits {
    fn acquire(&self) -> PermitGuard<'_> {
        let mut n = self.available.lock().unwrap();
        while *n == 0 {
            n = self.freed.wait(n).unwrap();
        }
        *n -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

pub struct HttpProvider {
    config: HttpProviderConfig,
    agent: ureq::Agent,
    permits: Permits,
}

impl HttpProvider {
    pub fn new(config: HttpProviderConfig) -> Result<Self> {
        if config.batch_size == 0 || config.max_in_flight == 0 || config.attempts == 0 {
            return Err(Error::Config(
                "embedding batch size, in-flight cap and attempts must be positive".into(),
            ));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .new_agent();
        Ok(HttpProvider {
            permits: Permits {
                available: Mutex::new(config.max_in_flight),
                freed: Condvar::new(),
            },
            agent,
            config,
        })
    }

    fn post_once(&self, body: &str) -> std::result::Result<String, String> {
        let mut request = self
            .agent
            .post(&self.config.endpoint)
            .header("Content-Type", "application/json");
        if let Some(token) = &self.config.token {
            request = request.header("Authorization", format!("Bearer {token}"));
        }
        let mut response = request.send(body).map_err(|e| e.to_string())?;
        response
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        let body = serde_json::to_string(&EmbedRequest { texts })?;
        let _permit = self.permits.acquire();
        let mut last_error = String::new();
        for attempt in 0..self.config.attempts {
            if attempt > 0 {
                thread::sleep(self.config.backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.post_once(&body) {
                Ok(text) => {
                    let parsed: EmbedResponse = serde_json::from_str(&text)
                        .map_err(|e| Error::Protocol(format!("bad response body: {e}")))?;
                    if parsed.embeddings.len() != texts.len() {
                        return Err(Error::Protocol(format!(
                            "sent {} texts, received {} embeddings",
                            texts.len(),
                            parsed.embeddings.len()
                        )));
                    }
                    return Ok(parsed.embeddings);
                }
                Err(e) => {
                    log::warn!("embedding request attempt {} failed: {e}", attempt + 1);
                    last_error = e;
                }
            }
        }
        Err(Error::Transport {
            attempts: self.config.attempts,
            message: last_error,
        })
    }
}

impl EmbeddingProvider for HttpProvider {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>> {
        for t in texts {
            ensure_non_empty(t)?;
        }
        let batches: Vec<&[&str]> = texts.chunks(self.config.batch_size).collect();
        if batches.len() <= 1 {
            return batches.first().map_or(Ok(Vec::new()), |b| self.request(b));
        }
        let results: Vec<Result<Vec<EmbeddingVector>>> = thread::scope(|scope| {
            let handles: Vec<_> = batches
                .iter()
                .map(|batch| scope.spawn(move || self.request(batch)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("embedding worker panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(texts.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    fn describe(&self) -> String {
        format!("http({})", self.config.endpoint)
    }
}
