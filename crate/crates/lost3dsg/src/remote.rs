//! Sentence embeddings from an HTTP service.
//!
//! Wire format: `POST {"texts": [..]}` answered by
//! `{"embeddings": [[..], ..]}`, one vector per text in request order.
//! Vectors are normalized on receipt.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use lost3dsg_core::{EmbedError, EmbedderKind, SentenceEmbedder};
use serde::{Deserialize, Serialize};

/// Environment variable holding the bearer token for the embedding service.
pub const TOKEN_ENV: &str = "LOST3DSG_EMBEDDER_TOKEN";

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Serialize)]
struct Request<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct Response {
    embeddings: Vec<Vec<f64>>,
}

pub struct RemoteEmbedder {
    endpoint: String,
    token: Option<String>,
    agent: ureq::Agent,
    dimension: OnceLock<usize>,
    memo: Mutex<HashMap<String, Vec<f64>>>,
}

impl std::fmt::Debug for RemoteEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteEmbedder")
            .field("endpoint", &self.endpoint)
            .field("dimension", &self.dimension.get())
            .finish_non_exhaustive()
    }
}

fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

impl RemoteEmbedder {
    pub fn new(endpoint: impl Into<String>) -> Self {
        RemoteEmbedder {
            endpoint: endpoint.into(),
            token: None,
            agent: agent(DEFAULT_TIMEOUT),
            dimension: OnceLock::new(),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.agent = agent(timeout);
        self
    }

    /// Sent as `Authorization: Bearer <token>`.
    pub fn with_token(mut self, token: impl Into<String>) -> Self {
        self.token = Some(token.into());
        self
    }

    /// Reads the token from [`TOKEN_ENV`] when it is set and non-empty.
    pub fn with_env_token(self) -> Self {
        match std::env::var(TOKEN_ENV) {
            Ok(t) if !t.is_empty() => self.with_token(t),
            _ => self,
        }
    }

    /// Pins the expected dimension; responses of any other size are errors.
    pub fn with_dimension(self, dimension: usize) -> Self {
        let _ = self.dimension.set(dimension);
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Embeds several texts, sending only the ones not seen before in one
    /// request.
    pub fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        if texts.iter().any(|t| t.trim().is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        let mut missing: Vec<&str> = {
            let memo = self.memo.lock().expect("memo lock");
            texts.iter().copied().filter(|t| !memo.contains_key(*t)).collect()
        };
        missing.sort_unstable();
        missing.dedup();
        if !missing.is_empty() {
            let vectors = self.request(&missing)?;
            let mut memo = self.memo.lock().expect("memo lock");
            for (text, v) in missing.iter().zip(vectors) {
                memo.insert((*text).to_owned(), v);
            }
        }
        let memo = self.memo.lock().expect("memo lock");
        Ok(texts.iter().map(|t| memo[*t].clone()).collect())
    }

    fn request(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = &self.token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(Request { texts })
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(EmbedError::Status { status, body });
        }
        let parsed: Response = resp
            .body_mut()
            .read_json()
            .map_err(|e| EmbedError::Malformed(e.to_string()))?;
        if parsed.embeddings.len() != texts.len() {
            return Err(EmbedError::Malformed(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                parsed.embeddings.len()
            )));
        }
        parsed
            .embeddings
            .into_iter()
            .map(|v| self.normalize(v))
            .collect()
    }

    fn normalize(&self, mut v: Vec<f64>) -> Result<Vec<f64>, EmbedError> {
        let expected = *self.dimension.get_or_init(|| v.len());
        if v.len() != expected {
            return Err(EmbedError::Dimension {
                expected,
                found: v.len(),
            });
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v.is_empty() || !norm.is_finite() || norm == 0.0 {
            return Err(EmbedError::Malformed("zero or non-finite embedding".into()));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        Ok(v)
    }
}

impl SentenceEmbedder for RemoteEmbedder {
    fn kind(&self) -> EmbedderKind {
        EmbedderKind::Remote
    }

    /// Zero until the first response arrives, unless pinned.
    fn dimension(&self) -> usize {
        self.dimension.get().copied().unwrap_or(0)
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, EmbedError> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }
}
