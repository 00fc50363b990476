use serde_json::{json, Value};

use super::{malformed, parse_body, status_error};
use crate::gateway::backend::{BackendCall, BackendError, HttpRequest, HttpResponse, RawCompletion, WireFormat};

/// Chat Completions API.
pub struct OpenAiWire;

impl OpenAiWire {
    /// The o1 family takes no system message or temperature and names its
    /// output cap differently.
    fn is_reasoning_model(model: &str) -> bool {
        model.starts_with("o1")
    }
}

impl WireFormat for OpenAiWire {
    fn default_base_url(&self) -> &'static str {
        "https://api.openai.com"
    }

    fn build(&self, call: &BackendCall<'_>, base_url: &str, api_key: &str) -> HttpRequest {
        let model = call.profile.api_model();
        let req = call.request;
        let body = if Self::is_reasoning_model(model) {
            json!({
                "model": model,
                "messages": [
                    {"role": "user", "content": format!("{}\n\n{}", req.system_text, req.user_text)}
                ],
                "max_completion_tokens": call.max_output_tokens,
            })
        } else {
            json!({
                "model": model,
                "messages": [
                    {"role": "system", "content": req.system_text},
                    {"role": "user", "content": req.user_text}
                ],
                "max_tokens": call.max_output_tokens,
                "temperature": req.temperature,
            })
        };
        HttpRequest {
            url: format!("{base_url}/v1/chat/completions"),
            headers: vec![
                ("authorization".into(), format!("Bearer {api_key}")),
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
        let text = body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(response, "choices[0].message.content"))?;
        Ok(RawCompletion {
            text: text.to_owned(),
            input_tokens: body.pointer("/usage/prompt_tokens").and_then(Value::as_u64),
            output_tokens: body.pointer("/usage/completion_tokens").and_then(Value::as_u64),
            provider_raw_id: body.get("id").and_then(Value::as_str).unwrap_or_default().to_owned(),
        })
    }
}
