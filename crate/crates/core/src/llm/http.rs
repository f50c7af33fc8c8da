//! OpenAI-compatible chat-completion client.
//!
//! Request: `POST {base_url}/chat/completions` with
//! `{"model", "messages": [{"role", "content"}], "temperature", "max_tokens"}`
//! and an optional bearer token. Response: `choices[0].message.content`
//! plus an optional `usage` object.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{count_tokens, ChatProvider, ChatRequest, ChatResponse, LlmError, Usage};

/// Environment variable holding the API key.
pub const API_KEY_ENV: &str = "PROMKG_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    pub base_url: String,
    /// Per-attempt timeout.
    pub timeout_secs: u64,
    /// Total attempts including the first one.
    pub max_attempts: u32,
    /// First backoff delay; doubles after each transient failure.
    pub backoff_ms: u64,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            base_url: "https://api.openai.com/v1".into(),
            timeout_secs: 120,
            max_attempts: 3,
            backoff_ms: 500,
        }
    }
}

#[derive(Debug)]
pub struct HttpProvider {
    config: HttpConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

impl HttpProvider {
    pub fn new(config: HttpConfig, api_key: Option<String>) -> Result<Self, LlmError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpProvider { config, api_key, http })
    }

    /// Reads the key from [`API_KEY_ENV`] if set.
    pub fn from_env(config: HttpConfig) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(config, key)
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn attempt(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let mut body = json!({
            "model": req.model,
            "messages": req.messages,
            "temperature": req.temperature,
        });
        if let Some(n) = req.max_tokens {
            body["max_tokens"] = json!(n);
        }
        let mut builder = self.http.post(self.endpoint()).json(&body);
        if let Some(key) = &self.api_key {
            builder = builder.bearer_auth(key);
        }
        let resp = builder.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Auth { status }),
            400 | 413 if looks_like_context_error(&text) => return Err(LlmError::RemoteContextLength(text)),
            _ => return Err(LlmError::Status { status, body: text }),
        }
        let wire: WireResponse = serde_json::from_str(&text).map_err(|e| LlmError::Malformed(e.to_string()))?;
        let content = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| LlmError::Malformed("no choices[0].message.content".into()))?;
        let usage = match wire.usage {
            Some(u) => Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            },
            None => Usage {
                prompt_tokens: req.estimated_tokens() as u64,
                completion_tokens: count_tokens(&content) as u64,
            },
        };
        Ok(ChatResponse { content, usage })
    }
}

fn looks_like_context_error(body: &str) -> bool {
    let b = body.to_ascii_lowercase();
    b.contains("context_length") || b.contains("context length") || b.contains("too many tokens")
}

impl ChatProvider for HttpProvider {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError> {
        let attempts = self.config.max_attempts.max(1);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = None;
        for attempt in 1..=attempts {
            match self.attempt(req) {
                Ok(r) => return Ok(r),
                Err(e) if e.is_transient() && attempt < attempts => {
                    tracing::warn!(attempt, error = %e, "transient llm failure, retrying");
                    std::thread::sleep(delay);
                    delay *= 2;
                    last = Some(e);
                }
                Err(e) => return Err(e),
            }
        }
        Err(last.unwrap_or_else(|| LlmError::Transport("no attempt made".into())))
    }

    fn name(&self) -> &str {
        "http"
    }
}
