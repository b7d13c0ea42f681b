//! Chat-completion client abstraction.
//!
//! [`HttpClient`] talks to any OpenAI-compatible `/chat/completions`
//! endpoint; [`MockClient`] answers from a fixture table keyed by
//! [`prompt_hash`] and is what tests and the `fixture` extractor use.

mod http;
mod mock;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use http::{ClientConfig, HttpClient, ENV_API_BASE, ENV_API_KEY, ENV_MODEL};
pub use mock::MockClient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    /// Panics if `content` is empty; message text is always produced by this
    /// crate's prompt builders.
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        let content = content.into();
        assert!(!content.is_empty(), "chat message content must be non-empty");
        Self { role, content }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionParams {
    pub model_name: String,
    pub temperature: f32,
    pub max_tokens: u32,
    #[serde(with = "duration_secs", rename = "timeout_secs")]
    pub timeout: Duration,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self {
            model_name: "phi-3.5-mini-instruct".into(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout: Duration::from_secs(60),
        }
    }
}

impl CompletionParams {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(ClientError::InvalidRequest(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(ClientError::InvalidRequest("max_tokens must be >= 1".into()));
        }
        Ok(())
    }
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("endpoint {url} unreachable after {attempts} attempt(s): {reason}")]
    EndpointUnreachable {
        url: String,
        attempts: u32,
        reason: String,
    },
    #[error("endpoint returned HTTP {code}: {body}")]
    HttpStatus { code: u16, body: String },
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("no fixture registered for prompt hash {hash}")]
    FixtureMiss { hash: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
}

/// Anything that can answer a chat-completion request.
pub trait CompletionClient: Send + Sync {
    fn complete(
        &self,
        messages: &[ChatMessage],
        params: &CompletionParams,
    ) -> Result<String, ClientError>;
}

impl<C: CompletionClient + ?Sized> CompletionClient for &C {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ClientError> {
        (**self).complete(messages, params)
    }
}

impl<C: CompletionClient + ?Sized> CompletionClient for Box<C> {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ClientError> {
        (**self).complete(messages, params)
    }
}

pub(crate) fn check_messages(messages: &[ChatMessage]) -> Result<(), ClientError> {
    match messages.last() {
        None => Err(ClientError::InvalidRequest("no messages".into())),
        Some(m) if m.role != Role::User => Err(ClientError::InvalidRequest(
            "last message must have role `user`".into(),
        )),
        Some(_) => Ok(()),
    }
}

/// Fixture key for a message list: the first 16 hex digits of the SHA-256
/// of the message contents joined by `\n`.
pub fn prompt_hash(messages: &[ChatMessage]) -> String {
    let mut hasher = Sha256::new();
    for (i, m) in messages.iter().enumerate() {
        if i > 0 {
            hasher.update(b"\n");
        }
        hasher.update(m.content.as_bytes());
    }
    hex::encode(&hasher.finalize()[..8])
}
