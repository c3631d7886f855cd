//! Chat-completion client.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{prompt_hash, PromptSpec};
use crate::http::{send_with_retry, HttpError, HttpRequest, RetryPolicy, Transport, UreqTransport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("provider error: {0}")]
    Provider(String),
}

impl From<HttpError> for LlmError {
    fn from(e: HttpError) -> Self {
        match e {
            HttpError::Auth(m) => LlmError::Auth(m),
            HttpError::RateLimited { attempts } => LlmError::RateLimited { attempts },
            HttpError::Timeout { attempts } => LlmError::Timeout { attempts },
            HttpError::Provider(m) => LlmError::Provider(m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model_id: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: f64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    /// Sustained request rate; 0 disables rate limiting.
    pub requests_per_second: f64,
    pub cache: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model_id: "gpt-3.5-turbo".into(),
            temperature: 0.5,
            max_retries: 5,
            timeout_secs: 60.0,
            api_key_env: "OPENAI_API_KEY".into(),
            max_in_flight: 4,
            requests_per_second: 3.0,
            cache: true,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.temperature >= 0.0) {
            return Err(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if !(self.timeout_secs > 0.0) {
            return Err("timeout_secs must be positive".into());
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        if self.model_id.is_empty() {
            return Err("model_id is empty".into());
        }
        Ok(())
    }
}

/// Anything that turns a rendered prompt into documentation text.
pub trait Completer: Send + Sync {
    fn complete(&self, prompt: &PromptSpec) -> Result<String, LlmError>;
}

/// Completes `prompt`, trimming surrounding whitespace.
pub fn complete(prompt: &PromptSpec, completer: &dyn Completer) -> Result<String, LlmError> {
    Ok(completer.complete(prompt)?.trim().to_string())
}

/// Offline completer that answers each query with a fixed reply looked up by
/// the query code.
#[derive(Debug, Clone, Default)]
pub struct EchoCompleter {
    replies: HashMap<String, String>,
}

impl EchoCompleter {
    pub fn new(replies: HashMap<String, String>) -> Self {
        Self { replies }
    }
}

impl Completer for EchoCompleter {
    fn complete(&self, prompt: &PromptSpec) -> Result<String, LlmError> {
        self.replies
            .get(&prompt.query_code)
            .cloned()
            .ok_or_else(|| LlmError::Provider("echo completer has no reply for this query".into()))
    }
}

/// Token bucket: `rate` tokens per second, at most `capacity` banked.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(rate: f64, capacity: f64) -> Self {
        Self { rate, capacity, state: Mutex::new((capacity, Instant::now())) }
    }

    /// Takes one token if available at `now`, else returns the wait needed.
    pub fn try_acquire(&self, now: Instant) -> Result<(), Duration> {
        let mut s = self.state.lock().expect("bucket lock");
        let elapsed = now.saturating_duration_since(s.1).as_secs_f64();
        s.0 = (s.0 + elapsed * self.rate).min(self.capacity);
        s.1 = now;
        if s.0 >= 1.0 {
            s.0 -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - s.0) / self.rate))
        }
    }

    pub fn acquire(&self) {
        while let Err(wait) = self.try_acquire(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
}

/// Counting semaphore bounding in-flight requests.
#[derive(Debug)]
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Semaphore {
    fn new(n: usize) -> Self {
        Self { free: Mutex::new(n), cv: Condvar::new() }
    }

    fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut free = self.free.lock().expect("semaphore lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("semaphore lock");
        }
        *free -= 1;
        SemaphoreGuard(self)
    }
}

struct SemaphoreGuard<'a>(&'a Semaphore);

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("semaphore lock") += 1;
        self.0.cv.notify_one();
    }
}

/// On-disk response cache keyed by prompt hash, model and temperature.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    prompt_hash: String,
    model_id: String,
    temperature: String,
    text: String,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(prompt_hash: &str, model_id: &str, temperature: f64) -> String {
        let mut h = Sha256::new();
        h.update(prompt_hash.as_bytes());
        h.update([0]);
        h.update(model_id.as_bytes());
        h.update([0]);
        h.update(format!("{temperature:?}").as_bytes());
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, prompt_hash: &str, model_id: &str, temperature: f64) -> Option<String> {
        let raw = std::fs::read(self.path(&Self::key(prompt_hash, model_id, temperature))).ok()?;
        let entry: CacheEntry = serde_json::from_slice(&raw).ok()?;
        (entry.prompt_hash == prompt_hash && entry.model_id == model_id).then_some(entry.text)
    }

    pub fn put(&self, prompt_hash: &str, model_id: &str, temperature: f64, text: &str) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let entry = CacheEntry {
            prompt_hash: prompt_hash.into(),
            model_id: model_id.into(),
            temperature: format!("{temperature:?}"),
            text: text.into(),
        };
        let path = self.path(&Self::key(prompt_hash, model_id, temperature));
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, serde_json::to_vec(&entry).expect("entry serializes"))?;
        std::fs::rename(tmp, path)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Client for an OpenAI-compatible chat-completions endpoint. Safe to share
/// across worker threads.
pub struct ChatClient {
    cfg: LlmConfig,
    transport: Box<dyn Transport>,
    bucket: Option<TokenBucket>,
    in_flight: Semaphore,
    cache: Option<ResponseCache>,
    retry: RetryPolicy,
}

impl ChatClient {
    pub fn new(cfg: LlmConfig, cache_dir: Option<PathBuf>) -> Self {
        Self::with_transport(cfg, cache_dir, Box::new(UreqTransport))
    }

    pub fn with_transport(cfg: LlmConfig, cache_dir: Option<PathBuf>, transport: Box<dyn Transport>) -> Self {
        let bucket = (cfg.requests_per_second > 0.0)
            .then(|| TokenBucket::new(cfg.requests_per_second, cfg.requests_per_second.max(1.0)));
        let cache = cache_dir.filter(|_| cfg.cache).map(ResponseCache::new);
        let retry = RetryPolicy { max_retries: cfg.max_retries, ..RetryPolicy::default() };
        Self { in_flight: Semaphore::new(cfg.max_in_flight.max(1)), cfg, transport, bucket, cache, retry }
    }

    pub fn with_retry_policy(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn config(&self) -> &LlmConfig {
        &self.cfg
    }

    /// Request body for a single user message. Keys serialize in sorted
    /// order, so equal prompts give equal bytes.
    pub fn request_body(&self, user_message: &str) -> String {
        json!({
            "model": self.cfg.model_id,
            "temperature": self.cfg.temperature,
            "messages": [{ "role": "user", "content": user_message }],
        })
        .to_string()
    }

    /// Sends one user message and returns the first choice's text.
    pub fn chat(&self, user_message: &str) -> Result<String, LlmError> {
        let hash = prompt_hash(user_message);
        if let Some(hit) = self.cache.as_ref().and_then(|c| c.get(&hash, &self.cfg.model_id, self.cfg.temperature)) {
            log::debug!("cache hit prompt={hash}");
            return Ok(hit);
        }
        let key = std::env::var(&self.cfg.api_key_env)
            .map_err(|_| LlmError::Auth(format!("environment variable {} is not set", self.cfg.api_key_env)))?;
        let request = HttpRequest {
            url: self.cfg.endpoint.clone(),
            headers: vec![("authorization".into(), format!("Bearer {key}"))],
            body: self.request_body(user_message),
            timeout: Duration::from_secs_f64(self.cfg.timeout_secs),
        };
        let _slot = self.in_flight.acquire();
        if let Some(b) = &self.bucket {
            b.acquire();
        }
        log::info!("chat request prompt={hash} model={}", self.cfg.model_id);
        let resp = send_with_retry(self.transport.as_ref(), &request, &self.retry)?;
        let parsed: Value = serde_json::from_str(&resp.body)
            .map_err(|e| LlmError::Provider(format!("response is not JSON: {e}")))?;
        let text = parsed["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| LlmError::Provider("response has no choices[0].message.content".into()))?
            .trim()
            .to_string();
        log::info!("chat response prompt={hash} chars={}", text.len());
        if let Some(c) = &self.cache {
            if let Err(e) = c.put(&hash, &self.cfg.model_id, self.cfg.temperature, &text) {
                log::warn!("could not write response cache: {e}");
            }
        }
        Ok(text)
    }
}

impl Completer for ChatClient {
    fn complete(&self, prompt: &PromptSpec) -> Result<String, LlmError> {
        self.chat(&prompt.rendered)
    }
}
