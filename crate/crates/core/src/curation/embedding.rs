//! Text embedding providers.

use std::time::Duration;

use serde_json::{json, Value};

use super::CurationError;
use crate::http::{send_with_retry, HttpRequest, RetryPolicy, Transport, UreqTransport};

pub trait EmbeddingProvider: Send + Sync {
    /// One vector per input text, all of dimension [`dim`](Self::dim).
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, CurationError>;
    fn dim(&self) -> usize;
    fn model_id(&self) -> &str;
}

/// Cosine similarity; 0 when either vector is all-zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Scales `v` to unit length in place; all-zero vectors are left alone.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Lowercase word pieces; identifiers are split on `_` and camelCase.
pub fn word_pieces(text: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for c in text.chars() {
        if c.is_alphanumeric() {
            let boundary = matches!(prev, Some(p) if p.is_lowercase() && c.is_uppercase());
            if boundary && !cur.is_empty() {
                pieces.push(std::mem::take(&mut cur));
            }
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            pieces.push(std::mem::take(&mut cur));
        }
        prev = Some(c);
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    pieces
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic offline provider: hashed bag of word pieces, L2-normalized.
#[derive(Debug, Clone)]
pub struct StubEmbeddingProvider {
    dim: usize,
}

impl Default for StubEmbeddingProvider {
    fn default() -> Self {
        Self { dim: 256 }
    }
}

impl StubEmbeddingProvider {
    pub fn with_dim(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for piece in word_pieces(text) {
            v[(fnv1a(piece.as_bytes()) % self.dim as u64) as usize] += 1.0;
        }
        l2_normalize(&mut v);
        v
    }
}

impl EmbeddingProvider for StubEmbeddingProvider {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, CurationError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn model_id(&self) -> &str {
        "stub-hash-v1"
    }
}

#[derive(Debug, Clone)]
pub struct HttpEmbeddingConfig {
    /// Full URL of an OpenAI-style `/embeddings` endpoint.
    pub endpoint: String,
    pub model_id: String,
    pub dim: usize,
    pub api_key_env: String,
    pub timeout: Duration,
    pub batch_size: usize,
    pub retry: RetryPolicy,
}

/// Remote provider speaking the `{"model", "input": [...]}` embeddings protocol.
pub struct HttpEmbeddingProvider {
    cfg: HttpEmbeddingConfig,
    transport: Box<dyn Transport>,
}

impl HttpEmbeddingProvider {
    pub fn new(cfg: HttpEmbeddingConfig) -> Self {
        Self::with_transport(cfg, Box::new(UreqTransport))
    }

    pub fn with_transport(cfg: HttpEmbeddingConfig, transport: Box<dyn Transport>) -> Self {
        Self { cfg, transport }
    }

    fn embed_batch(&self, key: &str, texts: &[&str]) -> Result<Vec<Vec<f64>>, CurationError> {
        let body = json!({ "model": self.cfg.model_id, "input": texts }).to_string();
        let request = HttpRequest {
            url: self.cfg.endpoint.clone(),
            headers: vec![("authorization".into(), format!("Bearer {key}"))],
            body,
            timeout: self.cfg.timeout,
        };
        let resp = send_with_retry(self.transport.as_ref(), &request, &self.cfg.retry)
            .map_err(|e| CurationError::ProviderUnavailable(e.to_string()))?;
        let parsed: Value = serde_json::from_str(&resp.body)
            .map_err(|e| CurationError::ProviderUnavailable(format!("bad response: {e}")))?;
        let data = parsed["data"]
            .as_array()
            .ok_or_else(|| CurationError::ProviderUnavailable("response has no 'data'".into()))?;
        let mut out = vec![Vec::new(); texts.len()];
        for (pos, item) in data.iter().enumerate() {
            let idx = item["index"].as_u64().map_or(pos, |i| i as usize);
            let vec: Option<Vec<f64>> =
                item["embedding"].as_array().map(|a| a.iter().filter_map(Value::as_f64).collect());
            match (out.get_mut(idx), vec) {
                (Some(slot), Some(v)) if v.len() == self.cfg.dim => *slot = v,
                _ => {
                    return Err(CurationError::ProviderUnavailable(format!(
                        "malformed embedding at position {pos}"
                    )))
                }
            }
        }
        if out.iter().any(Vec::is_empty) {
            return Err(CurationError::ProviderUnavailable("missing embeddings in response".into()));
        }
        Ok(out)
    }
}

impl EmbeddingProvider for HttpEmbeddingProvider {
    fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, CurationError> {
        let key = std::env::var(&self.cfg.api_key_env).map_err(|_| {
            CurationError::ProviderUnavailable(format!("{} is not set", self.cfg.api_key_env))
        })?;
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.cfg.batch_size.max(1)) {
            out.extend(self.embed_batch(&key, chunk)?);
        }
        Ok(out)
    }

    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn model_id(&self) -> &str {
        &self.cfg.model_id
    }
}
