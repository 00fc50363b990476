//! Dispatch seam between the gateway and concrete LLM providers.

use std::sync::Arc;
use std::time::Duration;

use super::{CompletionRequest, ModelProfile};
use crate::clock::Clock;

pub struct BackendCall<'a> {
    pub profile: &'a ModelProfile,
    pub request: &'a CompletionRequest,
    /// Already clamped to the model's completion window.
    pub max_output_tokens: u64,
    pub timeout: Duration,
    pub clock: &'a dyn Clock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawCompletion {
    pub text: String,
    /// Provider-reported usage, when the provider reports it.
    pub input_tokens: Option<u64>,
    pub output_tokens: Option<u64>,
    pub provider_raw_id: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    #[error("provider returned status {status:?}: {message}")]
    Provider {
        status: Option<u16>,
        retriable: bool,
        message: String,
    },
    #[error("timed out")]
    Timeout,
    #[error("transport failure: {0}")]
    Transport(String),
}

pub trait CompletionBackend: Send + Sync {
    fn complete(&self, call: &BackendCall<'_>) -> Result<RawCompletion, BackendError>;
}

// ---------------------------------------------------------------------------
// HTTP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error("request timed out")]
    Timeout,
    #[error("{0}")]
    Io(String),
}

/// Blocking JSON-over-HTTPS POST. Implemented outside the core crate.
pub trait HttpTransport: Send + Sync {
    fn post(&self, request: &HttpRequest, timeout: Duration) -> Result<HttpResponse, TransportError>;
}

/// One provider's request/response wire format.
pub trait WireFormat: Send + Sync {
    fn default_base_url(&self) -> &'static str;
    fn build(&self, call: &BackendCall<'_>, base_url: &str, api_key: &str) -> HttpRequest;
    fn parse(&self, response: &HttpResponse) -> Result<RawCompletion, BackendError>;
}

pub struct HttpBackend {
    wire: Box<dyn WireFormat>,
    transport: Arc<dyn HttpTransport>,
    base_url: String,
    api_key: String,
}

impl HttpBackend {
    pub fn new(wire: Box<dyn WireFormat>, transport: Arc<dyn HttpTransport>, api_key: impl Into<String>) -> Self {
        let base_url = wire.default_base_url().to_owned();
        Self {
            wire,
            transport,
            base_url,
            api_key: api_key.into(),
        }
    }

    pub fn with_base_url(mut self, base_url: impl Into<String>) -> Self {
        self.base_url = base_url.into().trim_end_matches('/').to_owned();
        self
    }
}

impl CompletionBackend for HttpBackend {
    fn complete(&self, call: &BackendCall<'_>) -> Result<RawCompletion, BackendError> {
        let request = self.wire.build(call, &self.base_url, &self.api_key);
        let response = self.transport.post(&request, call.timeout).map_err(|e| match e {
            TransportError::Timeout => BackendError::Timeout,
            TransportError::Io(msg) => BackendError::Transport(msg),
        })?;
        self.wire.parse(&response)
    }
}

/// Status classes worth retrying: throttling, overload and server errors.
pub fn is_retriable_status(status: u16) -> bool {
    status == 408 || status == 429 || status == 529 || (500..600).contains(&status)
}
