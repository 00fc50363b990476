mod common;

use std::sync::{Arc, Mutex};
use std::time::Duration;

use common::fixtures_dir;
use review_insight::gateway::backend::{HttpRequest, HttpResponse, HttpTransport, TransportError};
use review_insight::gateway::wire::wire_for;
use review_insight::gateway::{CompletionRequest, Gateway, GatewayError, HttpBackend, ModelRegistry};
use review_insight::money::Usd;
use review_insight::SimulatedClock;
use serde_json::Value;

/// Replays one recorded response and keeps the request it was sent.
struct Replay {
    status: u16,
    body: String,
    delay: Duration,
    clock: SimulatedClock,
    seen: Mutex<Vec<HttpRequest>>,
}

impl HttpTransport for Replay {
    fn post(&self, request: &HttpRequest, timeout: Duration) -> Result<HttpResponse, TransportError> {
        self.seen.lock().unwrap().push(request.clone());
        if self.delay > timeout {
            self.clock.advance(timeout);
            return Err(TransportError::Timeout);
        }
        self.clock.advance(self.delay);
        Ok(HttpResponse {
            status: self.status,
            body: self.body.clone(),
        })
    }
}

fn recorded(name: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join("llm").join(name)).unwrap()
}

fn gateway_for(model_id: &str, status: u16, file: &str, delay: Duration) -> (Gateway, Arc<Replay>) {
    let registry = Arc::new(ModelRegistry::seeded());
    let profile = registry.lookup(model_id).unwrap();
    let clock = SimulatedClock::at_default_epoch();
    let transport = Arc::new(Replay {
        status,
        body: recorded(file),
        delay,
        clock: clock.clone(),
        seen: Mutex::new(Vec::new()),
    });
    let backend = HttpBackend::new(wire_for(profile.provider).unwrap(), transport.clone(), "test-key");
    let gateway = Gateway::builder(registry, Arc::new(clock))
        .backend_for_model(model_id, Arc::new(backend))
        .build();
    (gateway, transport)
}

fn request(model_id: &str) -> CompletionRequest {
    CompletionRequest {
        model_id: model_id.into(),
        system_text: "Task: summary\nResponse language: en".into(),
        user_text: "## Review 2024-09-01 | 9.0/10\n+ Great beach.\n".into(),
        max_output_tokens: 1024,
        temperature: 0.2,
    }
}

fn body(t: &Replay) -> Value {
    serde_json::from_str(&t.seen.lock().unwrap()[0].body).unwrap()
}

#[test]
fn openai_chat_completion_round_trip() {
    let (gateway, transport) = gateway_for("gpt-4o", 200, "openai-chat.json", Duration::from_millis(7500));
    let response = gateway.complete(&request("gpt-4o")).unwrap();
    assert!(response.text.starts_with("Guests praise"));
    assert_eq!((response.input_tokens, response.output_tokens), (13_000, 500));
    assert_eq!(response.cost, "0.0375".parse::<Usd>().unwrap());
    assert_eq!(response.latency, Duration::from_millis(7500));
    assert_eq!(response.provider_raw_id, "chatcmpl-A9xk2mPq7RrT4vW1");

    let sent = transport.seen.lock().unwrap()[0].clone();
    assert_eq!(sent.url, "https://api.openai.com/v1/chat/completions");
    assert!(sent.headers.contains(&("authorization".into(), "Bearer test-key".into())));
    let b = body(&transport);
    assert_eq!(b["model"], "gpt-4o");
    assert_eq!(b["messages"][0]["role"], "system");
    assert_eq!(b["max_tokens"], 1024);
    assert_eq!(b["temperature"], 0.2);
}

#[test]
fn o1_requests_fold_the_system_prompt() {
    let (gateway, transport) = gateway_for("o1-mini", 200, "openai-chat.json", Duration::ZERO);
    gateway.complete(&request("o1-mini")).unwrap();
    let b = body(&transport);
    assert_eq!(b["messages"].as_array().unwrap().len(), 1);
    assert_eq!(b["messages"][0]["role"], "user");
    assert!(b["messages"][0]["content"].as_str().unwrap().starts_with("Task: summary"));
    assert_eq!(b["max_completion_tokens"], 1024);
    assert!(b.get("temperature").is_none());
}

#[test]
fn openai_rate_limit_is_retriable() {
    let (gateway, _) = gateway_for("gpt-4o", 429, "openai-rate-limit.json", Duration::ZERO);
    match gateway.complete(&request("gpt-4o")) {
        Err(GatewayError::Provider { status, retriable, message }) => {
            assert_eq!(status, Some(429));
            assert!(retriable);
            assert!(message.starts_with("Rate limit reached"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn anthropic_messages_round_trip() {
    let (gateway, transport) = gateway_for("claude-3.5-sonnet", 200, "anthropic-messages.json", Duration::ZERO);
    let response = gateway.complete(&request("claude-3.5-sonnet")).unwrap();
    assert_eq!(response.text, "Positives:\n- Close to the beach\nNegatives:\n- Street noise");
    // 2095 × $3/1M + 503 × $15/1M
    assert_eq!(response.cost, "0.01383".parse::<Usd>().unwrap());
    let sent = transport.seen.lock().unwrap()[0].clone();
    assert_eq!(sent.url, "https://api.anthropic.com/v1/messages");
    assert!(sent.headers.contains(&("anthropic-version".into(), "2023-06-01".into())));
    assert!(sent.headers.contains(&("x-api-key".into(), "test-key".into())));
    let b = body(&transport);
    assert_eq!(b["system"], "Task: summary\nResponse language: en");
    assert_eq!(b["max_tokens"], 1024);
}

#[test]
fn anthropic_overload_is_retriable() {
    let (gateway, _) = gateway_for("claude-3.5-sonnet", 529, "anthropic-overloaded.json", Duration::ZERO);
    assert!(matches!(
        gateway.complete(&request("claude-3.5-sonnet")),
        Err(GatewayError::Provider { status: Some(529), retriable: true, ref message }) if message == "Overloaded"
    ));
}

#[test]
fn gemini_generate_content_round_trip() {
    let (gateway, transport) = gateway_for("gemini-1.5-flash", 200, "gemini-generate.json", Duration::ZERO);
    let response = gateway.complete(&request("gemini-1.5-flash")).unwrap();
    assert_eq!(response.text, "The reviews do not mention parking prices.");
    assert_eq!(response.input_tokens, 8120);
    assert_eq!(response.cost, Usd::ZERO);
    let sent = transport.seen.lock().unwrap()[0].clone();
    assert_eq!(
        sent.url,
        "https://generativelanguage.googleapis.com/v1beta/models/gemini-1.5-flash:generateContent"
    );
    let b = body(&transport);
    assert_eq!(b["generationConfig"]["maxOutputTokens"], 1024);
    assert_eq!(b["systemInstruction"]["parts"][0]["text"], "Task: summary\nResponse language: en");
}

#[test]
fn gemini_bad_request_is_final() {
    let (gateway, _) = gateway_for("gemini-1.5-flash", 400, "gemini-bad-request.json", Duration::ZERO);
    assert!(matches!(
        gateway.complete(&request("gemini-1.5-flash")),
        Err(GatewayError::Provider { status: Some(400), retriable: false, .. })
    ));
}

#[test]
fn slow_transport_times_out_at_sixty_seconds() {
    let (gateway, _) = gateway_for("gpt-4o", 200, "openai-chat.json", Duration::from_secs(90));
    assert_eq!(
        gateway.complete(&request("gpt-4o")),
        Err(GatewayError::Timeout(Duration::from_secs(60)))
    );
}

#[test]
fn gemini_free_tier_throttles_the_sixteenth_request_in_a_minute() {
    let (gateway, transport) = gateway_for("gemini-1.5-flash", 200, "gemini-generate.json", Duration::ZERO);
    for _ in 0..15 {
        gateway.complete(&request("gemini-1.5-flash")).unwrap();
    }
    match gateway.complete(&request("gemini-1.5-flash")) {
        Err(GatewayError::RateLimited { retry_after }) => assert_eq!(retry_after, Duration::from_secs(60)),
        other => panic!("{other:?}"),
    }
    assert_eq!(transport.seen.lock().unwrap().len(), 15);
}
