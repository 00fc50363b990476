//! Provider wire formats. Each file maps one provider's HTTP API onto
//! [`super::backend::WireFormat`].

mod anthropic;
mod gemini;
mod openai;

pub use anthropic::AnthropicWire;
pub use gemini::GeminiWire;
pub use openai::OpenAiWire;

use serde_json::Value;

use super::backend::{is_retriable_status, BackendError, HttpResponse};
use super::registry::ProviderKind;
use super::backend::WireFormat;

/// Wire format for a provider, if it has one.
pub fn wire_for(kind: ProviderKind) -> Option<Box<dyn WireFormat>> {
    match kind {
        ProviderKind::OpenAi => Some(Box::new(OpenAiWire)),
        ProviderKind::Anthropic => Some(Box::new(AnthropicWire)),
        ProviderKind::Google => Some(Box::new(GeminiWire)),
        ProviderKind::HuggingFace | ProviderKind::Mock => None,
    }
}

fn parse_body(response: &HttpResponse) -> Result<Value, BackendError> {
    serde_json::from_str(&response.body).map_err(|e| BackendError::Provider {
        status: Some(response.status),
        retriable: is_retriable_status(response.status),
        message: format!("unparseable body: {e}"),
    })
}

/// Error for a non-2xx response; `message_at` points at the message in the
/// provider's error envelope.
fn status_error(response: &HttpResponse, message_at: &str) -> BackendError {
    let message = serde_json::from_str::<Value>(&response.body)
        .ok()
        .and_then(|v| v.pointer(message_at).and_then(Value::as_str).map(str::to_owned))
        .unwrap_or_else(|| response.body.chars().take(200).collect());
    BackendError::Provider {
        status: Some(response.status),
        retriable: is_retriable_status(response.status),
        message,
    }
}

fn malformed(response: &HttpResponse, what: &str) -> BackendError {
    BackendError::Provider {
        status: Some(response.status),
        retriable: false,
        message: format!("response missing {what}"),
    }
}
