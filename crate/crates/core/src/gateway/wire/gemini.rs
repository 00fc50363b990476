use serde_json::{json, Value};

use super::{malformed, parse_body, status_error};
use crate::gateway::backend::{BackendCall, BackendError, HttpRequest, HttpResponse, RawCompletion, WireFormat};

/// Generative Language API `generateContent`.
pub struct GeminiWire;

impl WireFormat for GeminiWire {
    fn default_base_url(&self) -> &'static str {
        "https://generativelanguage.googleapis.com"
    }

    fn build(&self, call: &BackendCall<'_>, base_url: &str, api_key: &str) -> HttpRequest {
        let req = call.request;
        let body = json!({
            "systemInstruction": {"parts": [{"text": req.system_text}]},
            "contents": [{"role": "user", "parts": [{"text": req.user_text}]}],
            "generationConfig": {
                "temperature": req.temperature,
                "maxOutputTokens": call.max_output_tokens,
            },
        });
        HttpRequest {
            url: format!("{base_url}/v1beta/models/{}:generateContent", call.profile.api_model()),
            headers: vec![
                ("x-goog-api-key".into(), api_key.to_owned()),
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
        let parts = body
            .pointer("/candidates/0/content/parts")
            .and_then(Value::as_array)
            .ok_or_else(|| malformed(response, "candidates[0].content.parts"))?;
        let text: String = parts
            .iter()
            .filter_map(|p| p.get("text").and_then(Value::as_str))
            .collect();
        Ok(RawCompletion {
            text,
            input_tokens: body.pointer("/usageMetadata/promptTokenCount").and_then(Value::as_u64),
            output_tokens: body.pointer("/usageMetadata/candidatesTokenCount").and_then(Value::as_u64),
            provider_raw_id: body
                .get("responseId")
                .and_then(Value::as_str)
                .unwrap_or_default()
                .to_owned(),
        })
    }
}
