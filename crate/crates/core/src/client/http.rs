use std::fmt;
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::Serialize;
use serde_json::Value;

use super::{check_messages, ChatMessage, ClientError, CompletionClient, CompletionParams};

pub const ENV_API_BASE: &str = "LIGHTKG_API_BASE";
pub const ENV_API_KEY: &str = "LIGHTKG_API_KEY";
pub const ENV_MODEL: &str = "LIGHTKG_MODEL";

const BODY_EXCERPT_CHARS: usize = 200;

#[derive(Clone)]
pub struct ClientConfig {
    /// Base URL, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub api_key: Option<String>,
    /// Retries after the first attempt on transient failures.
    pub retry_count: u32,
    /// Delay before the first retry; doubled on every further retry.
    pub initial_backoff: Duration,
}

impl fmt::Debug for ClientConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClientConfig")
            .field("base_url", &self.base_url)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("retry_count", &self.retry_count)
            .field("initial_backoff", &self.initial_backoff)
            .finish()
    }
}

impl ClientConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            retry_count: 2,
            initial_backoff: Duration::from_millis(250),
        }
    }

    /// Reads the base URL and optional API key from the environment.
    /// Returns `None` when no base URL is set.
    pub fn from_env() -> Option<Self> {
        let base = std::env::var(ENV_API_BASE).ok().filter(|s| !s.trim().is_empty())?;
        let mut config = Self::new(base);
        config.api_key = std::env::var(ENV_API_KEY).ok().filter(|s| !s.is_empty());
        Some(config)
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Serialize)]
struct RequestBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f32,
    max_tokens: u32,
}

/// Blocking client for OpenAI-compatible chat-completion endpoints.
pub struct HttpClient {
    config: ClientConfig,
    http: reqwest::blocking::Client,
}

enum Attempt {
    Done(String),
    Transient(ClientError),
    Fatal(ClientError),
}

impl HttpClient {
    pub fn new(config: ClientConfig) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| ClientError::InvalidRequest(e.to_string()))?;
        Ok(Self { config, http })
    }

    pub fn config(&self) -> &ClientConfig {
        &self.config
    }

    fn attempt(&self, url: &str, body: &RequestBody<'_>, timeout: Duration, attempt: u32) -> Attempt {
        let mut request = self.http.post(url).timeout(timeout).json(body);
        if let Some(key) = &self.config.api_key {
            request = request.bearer_auth(key);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) if e.is_timeout() => return Attempt::Transient(ClientError::Timeout(timeout)),
            Err(e) => {
                return Attempt::Transient(ClientError::EndpointUnreachable {
                    url: url.to_string(),
                    attempts: attempt,
                    reason: e.to_string(),
                })
            }
        };
        let status = response.status();
        let text = match response.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => return Attempt::Transient(ClientError::Timeout(timeout)),
            Err(e) => return Attempt::Fatal(ClientError::MalformedResponse(e.to_string())),
        };
        if !status.is_success() {
            let err = ClientError::HttpStatus {
                code: status.as_u16(),
                body: text.chars().take(BODY_EXCERPT_CHARS).collect(),
            };
            let transient = status.as_u16() == 429 || status.as_u16() == 408 || status.is_server_error();
            return if transient {
                Attempt::Transient(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        match extract_content(&text) {
            Ok(content) => Attempt::Done(content),
            Err(e) => Attempt::Fatal(e),
        }
    }
}

/// Reads `choices[0].message.content` from a response body.
fn extract_content(body: &str) -> Result<String, ClientError> {
    let value: Value =
        serde_json::from_str(body).map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| ClientError::MalformedResponse("missing choices[0].message.content".into()))
}

impl CompletionClient for HttpClient {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ClientError> {
        check_messages(messages)?;
        params.validate()?;
        let url = self.config.endpoint();
        let body = RequestBody {
            model: &params.model_name,
            messages,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        let max_attempts = 1 + self.config.retry_count;
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 1;
        loop {
            debug!("POST {url} attempt {attempt}/{max_attempts}");
            match self.attempt(&url, &body, params.timeout, attempt) {
                Attempt::Done(content) => return Ok(content),
                Attempt::Fatal(err) => return Err(err),
                Attempt::Transient(err) if attempt >= max_attempts => return Err(err),
                Attempt::Transient(err) => {
                    warn!("transient failure on attempt {attempt}: {err}; retrying in {backoff:?}");
                    thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_extraction() {
        let ok = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#;
        assert_eq!(extract_content(ok).unwrap(), "hi");
        for bad in [r#"{"choices":[]}"#, r#"{"choices":[{"message":{}}]}"#, "nope"] {
            assert!(matches!(extract_content(bad), Err(ClientError::MalformedResponse(_))));
        }
    }

    #[test]
    fn debug_redacts_key() {
        let mut c = ClientConfig::new("http://x");
        c.api_key = Some("sk-secret".into());
        let shown = format!("{c:?}");
        assert!(!shown.contains("sk-secret"));
        assert!(shown.contains("redacted"));
    }

    #[test]
    fn endpoint_joins_cleanly() {
        assert_eq!(
            ClientConfig::new("http://h:1/v1/").endpoint(),
            "http://h:1/v1/chat/completions"
        );
    }
}
