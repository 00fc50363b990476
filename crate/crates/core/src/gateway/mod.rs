//! Uniform completion interface over several LLM providers.
//!
//! The [`Gateway`] looks a model up in the [`ModelRegistry`], refuses
//! requests that cannot fit the model's prompt window, takes a rate-limit
//! permit, dispatches to the backend registered for the model (or its
//! provider), and prices the response from the registry's per-token rates.

mod audit;
pub mod backend;
mod cost;
pub mod mock;
mod ratelimit;
mod registry;
pub mod wire;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use audit::{AuditLog, AuditRecord};
pub use backend::{BackendError, CompletionBackend, HttpBackend, HttpTransport, RawCompletion};
pub use cost::estimate_cost;
pub use mock::{mock_complete, MockBackend};
pub use ratelimit::{Permit, RateLimiter, DAY, MINUTE};
pub use registry::{ModelProfile, ModelRegistry, ProviderKind, RateLimitPolicy, DEFAULT_SEED};

use crate::clock::Clock;
use crate::money::Usd;
use crate::retrieval::{estimate_tokens, TokenizerConfig};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GatewayError {
    #[error("unknown model: {0}")]
    UnknownModel(String),
    #[error("model already registered: {0}")]
    DuplicateModel(String),
    #[error("invalid profile for {model_id}: {reason}")]
    InvalidProfile { model_id: String, reason: String },
    #[error("invalid registry seed: {0}")]
    InvalidSeed(String),
    #[error("model {0} is marked unavailable")]
    ModelUnavailable(String),
    #[error("no backend configured for model {0}")]
    NoBackend(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("prompt needs {needed} tokens but the window holds {window}")]
    ContextOverflow { needed: u64, window: u64 },
    #[error("rate limited; retry after {retry_after:?}")]
    RateLimited { retry_after: Duration },
    #[error("request of {requested} tokens exceeds the per-minute limit of {limit}")]
    TokenRequestTooLarge { requested: u64, limit: u64 },
    #[error("provider error (status {status:?}, retriable: {retriable}): {message}")]
    Provider {
        status: Option<u16>,
        retriable: bool,
        message: String,
    },
    #[error("timed out after {0:?}")]
    Timeout(Duration),
}

impl GatewayError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::UnknownModel(_) => "UnknownModel",
            Self::DuplicateModel(_) => "DuplicateModel",
            Self::InvalidProfile { .. } => "InvalidProfile",
            Self::InvalidSeed(_) => "InvalidSeed",
            Self::ModelUnavailable(_) => "ModelUnavailable",
            Self::NoBackend(_) => "NoBackend",
            Self::InvalidRequest(_) => "InvalidRequest",
            Self::ContextOverflow { .. } => "ContextOverflow",
            Self::RateLimited { .. } => "RateLimited",
            Self::TokenRequestTooLarge { .. } => "TokenRequestTooLarge",
            Self::Provider { .. } => "ProviderError",
            Self::Timeout(_) => "Timeout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub system_text: String,
    pub user_text: String,
    pub max_output_tokens: u64,
    /// 0.0 ..= 2.0
    pub temperature: f64,
}

pub(crate) mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub model_id: String,
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    #[serde(rename = "latency_s", with = "duration_secs")]
    pub latency: Duration,
    pub cost: Usd,
    pub provider_raw_id: String,
}

pub struct GatewayBuilder {
    registry: Arc<ModelRegistry>,
    clock: Arc<dyn Clock>,
    tokenizer: TokenizerConfig,
    timeout: Duration,
    by_model: HashMap<String, Arc<dyn CompletionBackend>>,
    by_provider: HashMap<ProviderKind, Arc<dyn CompletionBackend>>,
    audit: Option<AuditLog>,
}

impl GatewayBuilder {
    pub fn backend_for_model(mut self, model_id: impl Into<String>, backend: Arc<dyn CompletionBackend>) -> Self {
        self.by_model.insert(model_id.into(), backend);
        self
    }

    pub fn backend_for_provider(mut self, kind: ProviderKind, backend: Arc<dyn CompletionBackend>) -> Self {
        self.by_provider.insert(kind, backend);
        self
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn tokenizer(mut self, tokenizer: TokenizerConfig) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn audit(mut self, log: AuditLog) -> Self {
        self.audit = Some(log);
        self
    }

    pub fn build(self) -> Gateway {
        Gateway {
            registry: self.registry,
            clock: self.clock,
            tokenizer: self.tokenizer,
            timeout: self.timeout,
            by_model: self.by_model,
            by_provider: self.by_provider,
            limiters: Mutex::new(HashMap::new()),
            calls: AtomicU64::new(0),
            audit: self.audit,
        }
    }
}

pub struct Gateway {
    registry: Arc<ModelRegistry>,
    clock: Arc<dyn Clock>,
    tokenizer: TokenizerConfig,
    timeout: Duration,
    by_model: HashMap<String, Arc<dyn CompletionBackend>>,
    by_provider: HashMap<ProviderKind, Arc<dyn CompletionBackend>>,
    limiters: Mutex<HashMap<String, RateLimiter>>,
    calls: AtomicU64,
    audit: Option<AuditLog>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("models", &self.registry.len())
            .field("timeout", &self.timeout)
            .field("calls", &self.call_count())
            .finish_non_exhaustive()
    }
}

impl Gateway {
    pub fn builder(registry: Arc<ModelRegistry>, clock: Arc<dyn Clock>) -> GatewayBuilder {
        GatewayBuilder {
            registry,
            clock,
            tokenizer: TokenizerConfig::default(),
            timeout: DEFAULT_TIMEOUT,
            by_model: HashMap::new(),
            by_provider: HashMap::new(),
            audit: None,
        }
    }

    pub fn registry(&self) -> &Arc<ModelRegistry> {
        &self.registry
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn tokenizer(&self) -> &TokenizerConfig {
        &self.tokenizer
    }

    /// Number of requests handed to a backend so far.
    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn lookup_model(&self, model_id: &str) -> Result<Arc<ModelProfile>, GatewayError> {
        self.registry.lookup(model_id)
    }

    /// Estimated prompt size: system and user text are estimated separately.
    pub fn prompt_tokens(&self, system_text: &str, user_text: &str) -> u64 {
        estimate_tokens(system_text, &self.tokenizer) + estimate_tokens(user_text, &self.tokenizer)
    }

    fn backend_for(&self, profile: &ModelProfile) -> Option<&Arc<dyn CompletionBackend>> {
        self.by_model
            .get(&profile.model_id)
            .or_else(|| self.by_provider.get(&profile.provider))
    }

    pub fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, GatewayError> {
        let profile = self.registry.lookup(&request.model_id)?;
        if !profile.available {
            return Err(GatewayError::ModelUnavailable(profile.model_id.clone()));
        }
        if !(0.0..=2.0).contains(&request.temperature) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} outside 0..=2",
                request.temperature
            )));
        }
        if request.max_output_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_output_tokens must be > 0".into()));
        }
        let prompt_tokens = self.prompt_tokens(&request.system_text, &request.user_text);
        if prompt_tokens > profile.prompt_window {
            return Err(GatewayError::ContextOverflow {
                needed: prompt_tokens,
                window: profile.prompt_window,
            });
        }
        let backend = self
            .backend_for(&profile)
            .ok_or_else(|| GatewayError::NoBackend(profile.model_id.clone()))?;

        if let Some(policy) = profile.rate_policy {
            let mut limiters = self.limiters.lock().expect("limiter lock poisoned");
            let limiter = limiters
                .entry(profile.model_id.clone())
                .or_insert_with(|| RateLimiter::new(policy));
            match limiter.acquire(prompt_tokens, self.clock.as_ref()) {
                Permit::Granted => {}
                Permit::RetryAfter { wait } => return Err(GatewayError::RateLimited { retry_after: wait }),
                Permit::TokenRequestTooLarge { requested, limit } => {
                    return Err(GatewayError::TokenRequestTooLarge { requested, limit })
                }
            }
        }

        let call = backend::BackendCall {
            profile: &profile,
            request,
            max_output_tokens: request.max_output_tokens.min(profile.completion_window),
            timeout: self.timeout,
            clock: self.clock.as_ref(),
        };
        self.calls.fetch_add(1, Ordering::SeqCst);
        let started = self.clock.monotonic();
        let outcome = backend.complete(&call);
        let latency = self.clock.monotonic().saturating_sub(started);

        let result = match outcome {
            Ok(raw) => {
                let input_tokens = raw.input_tokens.unwrap_or(prompt_tokens);
                let output_tokens = raw
                    .output_tokens
                    .unwrap_or_else(|| estimate_tokens(&raw.text, &self.tokenizer));
                Ok(CompletionResponse {
                    model_id: profile.model_id.clone(),
                    cost: estimate_cost(&profile, input_tokens, output_tokens),
                    text: raw.text,
                    input_tokens,
                    output_tokens,
                    latency,
                    provider_raw_id: raw.provider_raw_id,
                })
            }
            Err(BackendError::Timeout) => Err(GatewayError::Timeout(self.timeout)),
            Err(BackendError::Provider { status, retriable, message }) => Err(GatewayError::Provider {
                status,
                retriable,
                message,
            }),
            Err(BackendError::Transport(message)) => Err(GatewayError::Provider {
                status: None,
                retriable: true,
                message,
            }),
        };
        self.write_audit(&profile.model_id, latency, &result);
        result
    }

    fn write_audit(&self, model_id: &str, latency: Duration, result: &Result<CompletionResponse, GatewayError>) {
        let Some(audit) = &self.audit else { return };
        let record = match result {
            Ok(r) => AuditRecord {
                timestamp: self.clock.utc(),
                model_id: model_id.to_owned(),
                status: "ok".into(),
                input_tokens: r.input_tokens,
                output_tokens: r.output_tokens,
                cost: r.cost,
                latency_s: latency.as_secs_f64(),
                error: None,
            },
            Err(e) => AuditRecord {
                timestamp: self.clock.utc(),
                model_id: model_id.to_owned(),
                status: "error".into(),
                input_tokens: 0,
                output_tokens: 0,
                cost: Usd::ZERO,
                latency_s: latency.as_secs_f64(),
                error: Some(e.to_string()),
            },
        };
        audit.record(&record);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimulatedClock;

    struct CountingBackend(AtomicU64);

    impl CompletionBackend for CountingBackend {
        fn complete(&self, call: &backend::BackendCall<'_>) -> Result<RawCompletion, BackendError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(mock_complete(call.request))
        }
    }

    fn gateway_with(backend: Arc<dyn CompletionBackend>, clock: SimulatedClock) -> Gateway {
        let registry = Arc::new(ModelRegistry::seeded());
        registry.register(ModelProfile::mock("mock")).unwrap();
        Gateway::builder(registry, Arc::new(clock))
            .backend_for_provider(ProviderKind::Mock, Arc::clone(&backend))
            .backend_for_provider(ProviderKind::OpenAi, Arc::clone(&backend))
            .backend_for_provider(ProviderKind::Google, backend)
            .build()
    }

    fn request(model: &str, user: String) -> CompletionRequest {
        CompletionRequest {
            model_id: model.into(),
            system_text: "Task: summary\nResponse language: en".into(),
            user_text: user,
            max_output_tokens: 512,
            temperature: 0.2,
        }
    }

    #[test]
    fn mock_is_byte_identical_across_runs() {
        let clock = SimulatedClock::at_default_epoch();
        let gw = gateway_with(Arc::new(MockBackend::new()), clock);
        let a = gw.complete(&request("mock", "hello".into())).unwrap();
        let b = gw.complete(&request("mock", "hello".into())).unwrap();
        assert_eq!(a, b);
        assert_eq!(gw.call_count(), 2);
    }

    #[test]
    fn overflow_is_rejected_before_dispatch() {
        let backend = Arc::new(CountingBackend(AtomicU64::new(0)));
        let gw = gateway_with(backend.clone(), SimulatedClock::at_default_epoch());
        let err = gw.complete(&request("gpt-4", "x".repeat(8192 * 4))).unwrap_err();
        assert!(matches!(err, GatewayError::ContextOverflow { window: 8192, .. }));
        assert_eq!(backend.0.load(Ordering::SeqCst), 0);
        assert_eq!(gw.call_count(), 0);
    }

    #[test]
    fn injected_delay_is_reported_as_latency() {
        let clock = SimulatedClock::at_default_epoch();
        let gw = gateway_with(Arc::new(MockBackend::new().with_delay(Duration::from_secs(3))), clock);
        let response = gw.complete(&request("mock", "hi".into())).unwrap();
        assert!((response.latency.as_secs_f64() - 3.0).abs() <= 0.1);
    }

    #[test]
    fn slow_backend_times_out_at_sixty_seconds() {
        let clock = SimulatedClock::at_default_epoch();
        let gw = gateway_with(Arc::new(MockBackend::new().with_delay(Duration::from_secs(90))), clock.clone());
        let err = gw.complete(&request("mock", "hi".into())).unwrap_err();
        assert_eq!(err, GatewayError::Timeout(DEFAULT_TIMEOUT));
        assert_eq!(clock.monotonic(), DEFAULT_TIMEOUT);
    }

    #[test]
    fn cost_is_priced_from_the_registry() {
        let clock = SimulatedClock::at_default_epoch();
        let gw = gateway_with(Arc::new(MockBackend::new()), clock);
        let response = gw.complete(&request("gpt-4o", "y".repeat(4000))).unwrap();
        let profile = gw.lookup_model("gpt-4o").unwrap();
        assert_eq!(response.cost, estimate_cost(&profile, response.input_tokens, response.output_tokens));
        assert!(response.cost > Usd::ZERO);
    }

    #[test]
    fn unavailable_unknown_and_unrouted_models() {
        let gw = gateway_with(Arc::new(MockBackend::new()), SimulatedClock::at_default_epoch());
        assert!(matches!(gw.complete(&request("llama-3.2-3b", "x".into())), Err(GatewayError::ModelUnavailable(_))));
        assert!(matches!(gw.complete(&request("nope", "x".into())), Err(GatewayError::UnknownModel(_))));
        assert!(matches!(
            gw.complete(&request("claude-3.5-sonnet", "x".into())),
            Err(GatewayError::NoBackend(_))
        ));
        let mut bad = request("mock", "x".into());
        bad.temperature = 2.5;
        assert!(matches!(gw.complete(&bad), Err(GatewayError::InvalidRequest(_))));
    }

    #[test]
    fn gemini_requests_are_rate_limited() {
        let clock = SimulatedClock::at_default_epoch();
        let gw = gateway_with(Arc::new(MockBackend::new()), clock.clone());
        for _ in 0..15 {
            gw.complete(&request("gemini-1.5-flash", "q".into())).unwrap();
        }
        assert_eq!(
            gw.complete(&request("gemini-1.5-flash", "q".into())),
            Err(GatewayError::RateLimited { retry_after: MINUTE })
        );
        clock.advance(MINUTE);
        assert!(gw.complete(&request("gemini-1.5-flash", "q".into())).is_ok());
    }

    #[test]
    fn audit_log_writes_one_line_per_dispatch() {
        #[derive(Clone, Default)]
        struct Shared(Arc<Mutex<Vec<u8>>>);
        impl std::io::Write for Shared {
            fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
                self.0.lock().unwrap().extend_from_slice(buf);
                Ok(buf.len())
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        let sink = Shared::default();
        let registry = Arc::new(ModelRegistry::seeded());
        registry.register(ModelProfile::mock("mock")).unwrap();
        let gw = Gateway::builder(registry, Arc::new(SimulatedClock::at_default_epoch()))
            .backend_for_provider(ProviderKind::Mock, Arc::new(MockBackend::new()))
            .audit(AuditLog::new(sink.clone()))
            .build();
        gw.complete(&request("mock", "a".into())).unwrap();
        gw.complete(&request("mock", "b".into())).unwrap();
        let text = String::from_utf8(sink.0.lock().unwrap().clone()).unwrap();
        let records: Vec<AuditRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].status, "ok");
    }
}
