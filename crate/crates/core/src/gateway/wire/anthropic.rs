use serde_json::{json, Value};

use super::{malformed, parse_body, status_error};
use crate::gateway::backend::{BackendCall, BackendError, HttpRequest, HttpResponse, RawCompletion, WireFormat};

/// Messages API.
pub struct AnthropicWire;

const API_VERSION: &str = "2023-06-01";

impl WireFormat for AnthropicWire {
    fn default_base_url(&self) -> &'static str {
        "https://api.anthropic.com"
    }

    fn build(&self, call: &BackendCall<'_>, base_url: &str, api_key: &str) -> HttpRequest {
        let req = call.request;
        let body = json!({
            "model": call.profile.api_model(),
            "system": req.system_text,
            "messages": [{"role": "user", "content": req.user_text}],
            "max_tokens": call.max_output_tokens,
            "temperature": req.temperature,
        });
        HttpRequest {
            url: format!("{base_url}/v1/messages"),
            headers: vec![
                ("x-api-key".into(), api_key.to_owned()),
                ("anthropic-version".into(), API_VERSION.into()),
                ("content-type".into(), "application/json".into()),
            ],
            body: body.to_string(),
        }
    }

    fn parse(&self, response: &HttpResponse) -> Result<RawCompletion, BackendError> {
        if !(200..300).contains(&response.status) {
            return Err(status_error(response, "/error/message"));
        }
        let body = parse_body(response)?;
        let blocks = body
            .get("content")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(response, "content"))?;
        let text: String = blocks
            .iter()
            .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
            .filter_map(|b| b.get("text").and_then(Value::as_str))
            .collect();
        Ok(RawCompletion {
            text,
            input_tokens: body.pointer("/usage/input_tokens").and_then(Value::as_u64),
            output_tokens: body.pointer("/usage/output_tokens").and_then(Value::as_u64),
            provider_raw_id: body.get("id").and_then(Value::as_str).unwrap_or_default().to_owned(),
        })
    }
}
