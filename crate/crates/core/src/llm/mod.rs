//! Chat-completion providers.
//!
//! [`ChatProvider`] is the one seam between the pipeline and a language
//! model. [`HttpProvider`] talks to any OpenAI-compatible
//! `/chat/completions` endpoint; [`MockProvider`] replays canned responses
//! keyed by a [`fingerprint`] of the rendered prompt. [`Client`] wraps a
//! provider with the context-length pre-check, the in-flight limit, audit
//! logging and usage accounting.

mod client;
mod http;
mod mock;
mod session;
pub mod template;
mod tokens;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use client::{CallRecord, Client, ClientConfig, DEFAULT_CONTEXT_LIMIT, DEFAULT_MAX_IN_FLIGHT};
pub use http::{HttpConfig, HttpProvider, API_KEY_ENV};
pub use mock::{FnProvider, MockProvider, MockScript, RecordingProvider, ScriptEntry, ScriptError};
pub use session::Session;
pub use tokens::count_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: Option<u32>,
    /// Pipeline stage that issued the request. Only used for logging; it is
    /// not part of the fingerprint.
    pub stage: String,
}

impl ChatRequest {
    pub fn new(stage: impl Into<String>, messages: Vec<Message>) -> Self {
        ChatRequest {
            model: String::new(),
            messages,
            temperature: 0.0,
            max_tokens: None,
            stage: stage.into(),
        }
    }

    /// A single user message.
    pub fn user(stage: impl Into<String>, prompt: impl Into<String>) -> Self {
        Self::new(stage, vec![Message::user(prompt)])
    }

    /// Messages as one text block, the input to [`fingerprint`] and token
    /// estimation.
    pub fn rendered(&self) -> String {
        let mut s = String::new();
        for m in &self.messages {
            s.push_str(m.role.as_str());
            s.push('\n');
            s.push_str(&m.content);
            s.push('\n');
        }
        s
    }

    pub fn estimated_tokens(&self) -> usize {
        self.messages.iter().map(|m| count_tokens(&m.content)).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

impl Usage {
    pub fn total(&self) -> u64 {
        self.prompt_tokens + self.completion_tokens
    }
}

impl std::ops::AddAssign for Usage {
    fn add_assign(&mut self, rhs: Self) {
        self.prompt_tokens += rhs.prompt_tokens;
        self.completion_tokens += rhs.completion_tokens;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatResponse {
    pub content: String,
    pub usage: Usage,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LlmError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication rejected (HTTP {status})")]
    Auth { status: u16 },
    #[error("prompt too long: ~{estimated} tokens, limit {limit}")]
    ContextLength { estimated: usize, limit: usize },
    #[error("provider rejected prompt as too long: {0}")]
    RemoteContextLength(String),
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider response: {0}")]
    Malformed(String),
    #[error("no scripted response for fingerprint {fingerprint} (stage {stage})")]
    Unscripted { fingerprint: String, stage: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

impl LlmError {
    /// Whether a retry might succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            LlmError::Transport(_) => true,
            LlmError::Status { status, .. } => *status == 429 || *status >= 500,
            _ => false,
        }
    }
}

/// Stable hex SHA-256 of the rendered messages.
pub fn fingerprint(req: &ChatRequest) -> String {
    let digest = Sha256::digest(req.rendered().as_bytes());
    hex::encode(digest)
}

/// A chat-completion backend.
pub trait ChatProvider: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<ChatResponse, LlmError>;

    fn name(&self) -> &str;
}

impl fmt::Debug for dyn ChatProvider {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ChatProvider({})", self.name())
    }
}
