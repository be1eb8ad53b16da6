//! Batch execution of annotation requests against a chat-completion backend.
//!
//! [`annotate_batch`] runs at most `parallelism` requests at a time, retries
//! each failing request with full-jitter exponential backoff up to
//! `max_attempts`, and returns one [`RawResponse`] per request sorted by
//! record id. A request that exhausts its attempts is recorded as an
//! `api_failure`; the batch itself never aborts.

mod cost;
mod http;
mod mock;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::prompting::AnnotationRequest;

pub use cost::{estimate_cost, response_cost, CostEstimate, PricingConfig, SourceCost};
pub use http::{HttpBackend, HttpConfig};
pub use mock::{FailurePlan, MockBackend, MockFallback, MockFixtureRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    ApiFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawResponse {
    pub record_id: String,
    /// Assistant content; non-empty when `status` is ok.
    pub body_text: String,
    pub status: ResponseStatus,
    pub attempts: u32,
    pub input_tokens: u64,
    pub output_tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RawResponse {
    pub fn is_ok(&self) -> bool {
        self.status == ResponseStatus::Ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub content: String,
    pub usage: Option<Usage>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    /// Worth another attempt (timeouts, 429, 5xx, empty content).
    #[error("transient: {0}")]
    Transient(String),
    /// Retrying cannot help (bad request, auth).
    #[error("fatal: {0}")]
    Fatal(String),
}

/// Something that turns a request into assistant content.
pub trait CompletionBackend: Send + Sync {
    /// `attempt` is 1-based.
    fn complete(&self, request: &AnnotationRequest, attempt: u32) -> Result<Completion, BackendError>;
}

/// Pluggable token counter used for cost estimation and for responses
/// whose backend does not report usage.
pub trait TokenEstimator: Send + Sync {
    fn estimate(&self, text: &str) -> u64;
}

/// `ceil(chars / 4)` over Unicode scalar values.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharsDiv4;

impl TokenEstimator for CharsDiv4 {
    fn estimate(&self, text: &str) -> u64 {
        (text.chars().count() as u64).div_ceil(4)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClientConfig {
    /// Maximum in-flight requests.
    pub parallelism: usize,
    /// Attempts per request, including the first.
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
    /// Seed for the backoff jitter.
    pub jitter_seed: u64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            parallelism: 8,
            max_attempts: 3,
            base_delay_ms: 500,
            max_delay_ms: 30_000,
            jitter_seed: 0,
        }
    }
}

impl ClientConfig {
    /// Full-jitter delay before attempt `next_attempt` (2-based: the first retry).
    ///
    /// Uniform in `[0, min(max_delay, base_delay * 2^(next_attempt - 2))]`,
    /// drawn from a generator keyed by seed, record id and attempt so the
    /// schedule does not depend on thread interleaving.
    pub fn backoff(&self, record_id: &str, next_attempt: u32) -> Duration {
        let exp = next_attempt.saturating_sub(2).min(32);
        let cap = self
            .base_delay_ms
            .saturating_mul(1u64 << exp)
            .min(self.max_delay_ms);
        if cap == 0 {
            return Duration::ZERO;
        }
        let mut h = Sha256::new();
        h.update(self.jitter_seed.to_le_bytes());
        h.update(record_id.as_bytes());
        h.update(next_attempt.to_le_bytes());
        let seed: [u8; 32] = h.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        Duration::from_millis(rng.gen_range(0..=cap))
    }
}

fn run_one(
    backend: &dyn CompletionBackend,
    request: &AnnotationRequest,
    cfg: &ClientConfig,
    estimator: &dyn TokenEstimator,
) -> RawResponse {
    let max_attempts = cfg.max_attempts.max(1);
    let prompt_estimate: u64 = request.messages.iter().map(|m| estimator.estimate(&m.content)).sum();
    let mut last_error;
    let mut attempt = 1;
    loop {
        match backend.complete(request, attempt) {
            Ok(c) if !c.content.trim().is_empty() => {
                let (input_tokens, output_tokens) = match c.usage {
                    Some(u) => (u.prompt_tokens, u.completion_tokens),
                    None => (prompt_estimate, estimator.estimate(&c.content)),
                };
                return RawResponse {
                    record_id: request.record_id.clone(),
                    body_text: c.content,
                    status: ResponseStatus::Ok,
                    attempts: attempt,
                    input_tokens,
                    output_tokens,
                    error: None,
                };
            }
            Ok(_) => last_error = "empty completion".to_string(),
            Err(BackendError::Transient(e)) => last_error = e,
            Err(BackendError::Fatal(e)) => {
                last_error = e;
                break;
            }
        }
        if attempt >= max_attempts {
            break;
        }
        attempt += 1;
        let wait = cfg.backoff(&request.record_id, attempt);
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
    tracing::warn!(record_id = %request.record_id, attempts = attempt, error = %last_error, "api failure");
    RawResponse {
        record_id: request.record_id.clone(),
        body_text: String::new(),
        status: ResponseStatus::ApiFailure,
        attempts: attempt,
        input_tokens: prompt_estimate,
        output_tokens: 0,
        error: Some(last_error),
    }
}

/// Runs every request and returns the responses ordered by record id.
pub fn annotate_batch(
    backend: &dyn CompletionBackend,
    requests: &[AnnotationRequest],
    cfg: &ClientConfig,
    estimator: &dyn TokenEstimator,
) -> Vec<RawResponse> {
    if requests.is_empty() {
        return Vec::new();
    }
    let workers = cfg.parallelism.clamp(1, requests.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<RawResponse>> = Mutex::new(Vec::with_capacity(requests.len()));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = requests.get(i) else { break };
                let resp = run_one(backend, req, cfg, estimator);
                results.lock().expect("result lock").push(resp);
            });
        }
    });
    let mut out = results.into_inner().expect("result lock");
    out.sort_by(|a, b| a.record_id.cmp(&b.record_id));
    out
}
