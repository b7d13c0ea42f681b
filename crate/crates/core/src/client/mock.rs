use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use super::{check_messages, prompt_hash, ChatMessage, ClientError, CompletionClient, CompletionParams};

/// Deterministic client answering from a `prompt hash -> response` table.
#[derive(Debug, Default)]
pub struct MockClient {
    fixtures: HashMap<String, String>,
    calls: AtomicUsize,
}

impl MockClient {
    pub fn new(fixtures: HashMap<String, String>) -> Self {
        Self {
            fixtures,
            calls: AtomicUsize::new(0),
        }
    }

    /// Loads a JSON object mapping prompt hashes to response text.
    pub fn from_json_file(path: &Path) -> Result<Self, std::io::Error> {
        let text = std::fs::read_to_string(path)?;
        let fixtures: HashMap<String, String> = serde_json::from_str(&text)?;
        Ok(Self::new(fixtures))
    }

    /// Registers `response` for the given message list.
    pub fn with_response(mut self, messages: &[ChatMessage], response: impl Into<String>) -> Self {
        self.fixtures.insert(prompt_hash(messages), response.into());
        self
    }

    /// Number of `complete` calls served so far, hits and misses alike.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl CompletionClient for MockClient {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ClientError> {
        check_messages(messages)?;
        params.validate()?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        let hash = prompt_hash(messages);
        self.fixtures
            .get(&hash)
            .cloned()
            .ok_or(ClientError::FixtureMiss { hash })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prompt(text: &str) -> Vec<ChatMessage> {
        vec![ChatMessage::system("extract"), ChatMessage::user(text)]
    }

    #[test]
    fn registered_prompt_answers() {
        let client = MockClient::default().with_response(&prompt("a"), "(x | y | z)");
        let params = CompletionParams::default();
        assert_eq!(client.complete(&prompt("a"), &params).unwrap(), "(x | y | z)");
        assert_eq!(client.complete(&prompt("a"), &params).unwrap(), "(x | y | z)");
        assert_eq!(client.calls(), 2);
    }

    #[test]
    fn miss_names_hash() {
        let client = MockClient::default();
        let err = client
            .complete(&prompt("b"), &CompletionParams::default())
            .unwrap_err();
        let expected = prompt_hash(&prompt("b"));
        match err {
            ClientError::FixtureMiss { hash } => assert_eq!(hash, expected),
            other => panic!("unexpected {other:?}"),
        }
        assert!(err_message_contains_hash(&expected));
    }

    fn err_message_contains_hash(hash: &str) -> bool {
        ClientError::FixtureMiss { hash: hash.into() }
            .to_string()
            .contains(hash)
    }
}
