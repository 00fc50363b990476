//! Deterministic offline stand-in for an LLM provider.
//!
//! The response text is a one-line diagnostic:
//!
//! ```text
//! mock kind=summary digest=3f1c…(16 hex) blocks=70 language=en
//! ```
//!
//! `digest` hashes the system and user text, `blocks` counts review blocks in
//! the user text and `language` echoes the prompt's language directive.

use std::time::Duration;

use sha2::{Digest, Sha256};

use super::backend::{BackendCall, BackendError, CompletionBackend, RawCompletion};
use super::CompletionRequest;
use crate::retrieval::{estimate_tokens, TokenizerConfig, REVIEW_BLOCK_MARKER};
use crate::review::hex;

/// Line prefix the mock reads the language code from.
pub const LANGUAGE_DIRECTIVE: &str = "Response language: ";
/// Line prefix the mock reads the task kind from.
pub const TASK_DIRECTIVE: &str = "Task: ";

#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    delay: Duration,
    task_delays: Vec<(String, Duration)>,
    failure: Option<BackendError>,
}

impl MockBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sleeps this long on the call's clock before answering. Delays past the
    /// call's timeout produce [`BackendError::Timeout`] after the timeout.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = delay;
        self
    }

    /// Overrides the delay for prompts whose task directive is `task`.
    pub fn with_task_delay(mut self, task: impl Into<String>, delay: Duration) -> Self {
        self.task_delays.push((task.into(), delay));
        self
    }

    fn delay_for(&self, request: &CompletionRequest) -> Duration {
        let task = directive(request, TASK_DIRECTIVE);
        self.task_delays
            .iter()
            .find(|(t, _)| Some(t.as_str()) == task.as_deref())
            .map_or(self.delay, |(_, d)| *d)
    }

    pub fn failing(mut self, error: BackendError) -> Self {
        self.failure = Some(error);
        self
    }
}

fn prompt_digest(request: &CompletionRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(request.system_text.as_bytes());
    hasher.update([0u8]);
    hasher.update(request.user_text.as_bytes());
    hex(&hasher.finalize()[..8])
}

fn directive(request: &CompletionRequest, prefix: &str) -> Option<String> {
    request
        .system_text
        .lines()
        .chain(request.user_text.lines())
        .find_map(|l| l.strip_prefix(prefix))
        .map(|s| s.trim().to_owned())
}

pub fn mock_text(request: &CompletionRequest) -> String {
    let digest = prompt_digest(request);

    let blocks = request
        .user_text
        .lines()
        .filter(|l| l.starts_with(REVIEW_BLOCK_MARKER))
        .count();
    let language = directive(request, LANGUAGE_DIRECTIVE).unwrap_or_else(|| "unknown".into());
    let kind = directive(request, TASK_DIRECTIVE).unwrap_or_else(|| "unknown".into());
    format!("mock kind={kind} digest={digest} blocks={blocks} language={language}")
}

/// Response the mock backend produces for `request`, without delay.
pub fn mock_complete(request: &CompletionRequest) -> RawCompletion {
    let tokenizer = TokenizerConfig::default();
    let text = mock_text(request);
    RawCompletion {
        input_tokens: Some(
            estimate_tokens(&request.system_text, &tokenizer) + estimate_tokens(&request.user_text, &tokenizer),
        ),
        output_tokens: Some(estimate_tokens(&text, &tokenizer)),
        provider_raw_id: format!("mock-{}", prompt_digest(request)),
        text,
    }
}

impl CompletionBackend for MockBackend {
    fn complete(&self, call: &BackendCall<'_>) -> Result<RawCompletion, BackendError> {
        let delay = self.delay_for(call.request);
        if delay > call.timeout {
            call.clock.sleep(call.timeout);
            return Err(BackendError::Timeout);
        }
        call.clock.sleep(delay);
        if let Some(err) = &self.failure {
            return Err(err.clone());
        }
        Ok(mock_complete(call.request))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(user: &str) -> CompletionRequest {
        CompletionRequest {
            model_id: "mock".into(),
            system_text: "Task: query\nResponse language: fr\n".into(),
            user_text: user.into(),
            max_output_tokens: 100,
            temperature: 0.2,
        }
    }

    #[test]
    fn counts_blocks_and_echoes_language() {
        let user: String = (0..70).map(|i| format!("## Review 2024-01-{:02} | 8.0/10\n+ ok\n\n", i % 28 + 1)).collect();
        let text = mock_text(&request(&user));
        assert!(text.contains("blocks=70"), "{text}");
        assert!(text.contains("language=fr"));
        assert!(text.contains("kind=query"));
        assert!(mock_text(&request("")).contains("blocks=0"));
    }

    #[test]
    fn deterministic() {
        assert_eq!(mock_complete(&request("abc")), mock_complete(&request("abc")));
        assert_ne!(mock_text(&request("abc")), mock_text(&request("abd")));
    }
}
