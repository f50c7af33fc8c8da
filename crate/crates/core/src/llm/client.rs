use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{fingerprint, ChatProvider, ChatRequest, ChatResponse, LlmError, Message, Usage};

pub const DEFAULT_CONTEXT_LIMIT: usize = 128_000;
pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientConfig {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    pub context_limit: usize,
    pub max_in_flight: usize,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            model: "gpt-4o".into(),
            temperature: 0.0,
            max_tokens: Some(1024),
            context_limit: DEFAULT_CONTEXT_LIMIT,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

/// One completed (or failed) model call, for stage traces and audits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub stage: String,
    pub fingerprint: String,
    pub usage: Usage,
    pub prompt_estimate: usize,
    pub elapsed_ms: u64,
    pub ok: bool,
}

/// Counting semaphore; std has none.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|p| p.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|p| p.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut free = self.0.free.lock().unwrap_or_else(|p| p.into_inner());
        *free += 1;
        self.0.cv.notify_one();
    }
}

/// Shared front door to a provider. Cloning is cheap and clones share the
/// in-flight limit and usage totals.
#[derive(Debug, Clone)]
pub struct Client {
    inner: Arc<Inner>,
}

#[derive(Debug)]
struct Inner {
    provider: Arc<dyn ChatProvider>,
    config: ClientConfig,
    gate: Gate,
    usage: Mutex<Usage>,
    calls: AtomicUsize,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
}

impl Client {
    pub fn new(provider: Arc<dyn ChatProvider>, config: ClientConfig) -> Self {
        let slots = config.max_in_flight.max(1);
        Client {
            inner: Arc::new(Inner {
                provider,
                config,
                gate: Gate {
                    free: Mutex::new(slots),
                    cv: Condvar::new(),
                },
                usage: Mutex::new(Usage::default()),
                calls: AtomicUsize::new(0),
                in_flight: AtomicUsize::new(0),
                peak_in_flight: AtomicUsize::new(0),
            }),
        }
    }

    pub fn config(&self) -> &ClientConfig {
        &self.inner.config
    }

    pub fn provider_name(&self) -> &str {
        self.inner.provider.name()
    }

    /// Sends one request. Prompts estimated above the context limit fail
    /// before the provider sees them.
    #[allow(clippy::result_large_err)]
    pub fn complete(&self, stage: &str, messages: Vec<Message>) -> Result<(ChatResponse, CallRecord), (LlmError, CallRecord)> {
        let cfg = &self.inner.config;
        let req = ChatRequest {
            model: cfg.model.clone(),
            messages,
            temperature: cfg.temperature,
            max_tokens: cfg.max_tokens,
            stage: stage.to_string(),
        };
        let fp = fingerprint(&req);
        let estimate = req.estimated_tokens();
        let mut record = CallRecord {
            stage: stage.to_string(),
            fingerprint: fp.clone(),
            usage: Usage::default(),
            prompt_estimate: estimate,
            elapsed_ms: 0,
            ok: false,
        };
        if req.messages.is_empty() {
            return Err((LlmError::InvalidRequest("empty message list".into()), record));
        }
        if estimate > cfg.context_limit {
            tracing::warn!(stage, fingerprint = %fp, estimate, "prompt over context limit");
            return Err((
                LlmError::ContextLength {
                    estimated: estimate,
                    limit: cfg.context_limit,
                },
                record,
            ));
        }

        let started = Instant::now();
        let result = {
            let _permit = self.inner.gate.acquire();
            let now = self.inner.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
            self.inner.peak_in_flight.fetch_max(now, Ordering::SeqCst);
            let r = self.inner.provider.complete(&req);
            self.inner.in_flight.fetch_sub(1, Ordering::SeqCst);
            r
        };
        record.elapsed_ms = started.elapsed().as_millis() as u64;
        self.inner.calls.fetch_add(1, Ordering::SeqCst);
        match result {
            Ok(resp) => {
                record.usage = resp.usage;
                record.ok = true;
                *self.inner.usage.lock().unwrap_or_else(|p| p.into_inner()) += resp.usage;
                tracing::info!(
                    stage,
                    fingerprint = %fp,
                    prompt_tokens = resp.usage.prompt_tokens,
                    completion_tokens = resp.usage.completion_tokens,
                    "llm call"
                );
                Ok((resp, record))
            }
            Err(e) => {
                tracing::warn!(stage, fingerprint = %fp, error = %e, "llm call failed");
                Err((e, record))
            }
        }
    }

    /// Usage summed over every successful call made through this client.
    pub fn total_usage(&self) -> Usage {
        *self.inner.usage.lock().unwrap_or_else(|p| p.into_inner())
    }

    pub fn call_count(&self) -> usize {
        self.inner.calls.load(Ordering::SeqCst)
    }

    /// Highest number of concurrent provider calls observed.
    pub fn peak_in_flight(&self) -> usize {
        self.inner.peak_in_flight.load(Ordering::SeqCst)
    }
}
