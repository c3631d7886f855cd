//! Minimal blocking JSON-over-HTTP layer shared by the chat and embedding
//! clients, with retry and backoff on throttling and transient failures.

use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
    pub retry_after: Option<Duration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Connection(String),
}

pub trait Transport: Send + Sync {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

/// Transport backed by `ureq`.
#[derive(Debug, Default, Clone, Copy)]
pub struct UreqTransport;

impl Transport for UreqTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(request.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let mut req = agent.post(&request.url).header("content-type", "application/json");
        for (k, v) in &request.headers {
            req = req.header(k.as_str(), v.as_str());
        }
        let mut resp = req.send(request.body.as_str()).map_err(|e| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout,
            other => TransportError::Connection(other.to_string()),
        })?;
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s >= 0.0)
            .map(Duration::from_secs_f64);
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Connection(e.to_string()))?;
        Ok(HttpResponse { status, body, retry_after })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 5,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based): `base * 2^retry`, capped,
    /// or the server's Retry-After when given.
    pub fn delay(&self, retry: u32, retry_after: Option<Duration>) -> Duration {
        let backoff = self.base_delay.saturating_mul(2u32.saturating_pow(retry.min(16)));
        retry_after.unwrap_or(backoff).min(self.max_delay)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HttpError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("request timed out after {attempts} attempts")]
    Timeout { attempts: u32 },
    #[error("provider error: {0}")]
    Provider(String),
}

fn retryable_status(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

/// Sends `request`, retrying 429, 5xx and timeouts up to `max_retries` times.
pub fn send_with_retry(
    transport: &dyn Transport,
    request: &HttpRequest,
    policy: &RetryPolicy,
) -> Result<HttpResponse, HttpError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let (failure, retry_after) = match transport.post(request) {
            Ok(resp) if (200..300).contains(&resp.status) => return Ok(resp),
            Ok(resp) if resp.status == 401 || resp.status == 403 => {
                return Err(HttpError::Auth(format!("status {}", resp.status)))
            }
            Ok(resp) if retryable_status(resp.status) => {
                let err = if resp.status == 429 {
                    HttpError::RateLimited { attempts }
                } else {
                    HttpError::Provider(format!("status {}: {}", resp.status, snippet(&resp.body)))
                };
                (err, resp.retry_after)
            }
            Ok(resp) => {
                return Err(HttpError::Provider(format!(
                    "status {}: {}",
                    resp.status,
                    snippet(&resp.body)
                )))
            }
            Err(TransportError::Timeout) => (HttpError::Timeout { attempts }, None),
            Err(TransportError::Connection(m)) => return Err(HttpError::Provider(m)),
        };
        if attempts > policy.max_retries {
            return Err(failure);
        }
        let wait = policy.delay(attempts - 1, retry_after);
        log::debug!("retrying in {wait:?} after: {failure}");
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

fn snippet(body: &str) -> String {
    body.chars().take(200).collect()
}

/// Scripted transport for tests: replays canned responses in order and
/// records every request it receives.
#[derive(Debug, Default)]
pub struct MockTransport {
    script: std::sync::Mutex<std::collections::VecDeque<Result<HttpResponse, TransportError>>>,
    seen: std::sync::Mutex<Vec<HttpRequest>>,
    fallback: Option<HttpResponse>,
}

impl MockTransport {
    pub fn scripted(responses: Vec<Result<HttpResponse, TransportError>>) -> Self {
        Self { script: std::sync::Mutex::new(responses.into()), ..Default::default() }
    }

    /// Answers every request with `body` and status 200.
    pub fn always(body: &str) -> Self {
        Self { fallback: Some(ok(body)), ..Default::default() }
    }

    pub fn requests(&self) -> Vec<HttpRequest> {
        self.seen.lock().expect("mock lock").clone()
    }
}

impl Transport for MockTransport {
    fn post(&self, request: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.seen.lock().expect("mock lock").push(request.clone());
        match self.script.lock().expect("mock lock").pop_front() {
            Some(r) => r,
            None => self
                .fallback
                .clone()
                .ok_or_else(|| TransportError::Connection("mock script exhausted".into())),
        }
    }
}

pub fn ok(body: &str) -> HttpResponse {
    HttpResponse { status: 200, body: body.to_string(), retry_after: None }
}

pub fn status(code: u16) -> HttpResponse {
    HttpResponse { status: code, body: String::new(), retry_after: None }
}
