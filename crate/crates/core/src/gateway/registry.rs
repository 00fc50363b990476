//! Model registry seeded from a human-editable TOML file.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use super::GatewayError;
use crate::money::Usd;

/// Seed shipped with the crate.
pub const DEFAULT_SEED: &str = include_str!("../../data/models.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[serde(rename = "openai")]
    OpenAi,
    Anthropic,
    Google,
    HuggingFace,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RateLimitPolicy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_minute: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_day: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens_per_minute: Option<u64>,
}

impl RateLimitPolicy {
    /// Free-tier limits of the Gemini API: 15 rpm, 1,500 rpd, 1M tpm.
    pub const GEMINI_FREE_TIER: RateLimitPolicy = RateLimitPolicy {
        requests_per_minute: Some(15),
        requests_per_day: Some(1500),
        tokens_per_minute: Some(1_000_000),
    };

    fn validate(&self) -> Result<(), String> {
        if self.requests_per_minute == Some(0) || self.requests_per_day == Some(0) || self.tokens_per_minute == Some(0) {
            return Err("rate limits must be > 0 when present".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub model_id: String,
    pub display_name: String,
    /// `YYYY-MM`.
    pub release_date: String,
    pub input_cost_per_1m: Usd,
    pub output_cost_per_1m: Usd,
    pub prompt_window: u64,
    pub completion_window: u64,
    pub open_source: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_policy: Option<RateLimitPolicy>,
    pub provider: ProviderKind,
    /// Model name on the provider's wire API, when it differs from `model_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_model: Option<String>,
    /// Environment variable holding the provider API key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "yes")]
    pub available: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn yes() -> bool {
    true
}

impl ModelProfile {
    pub fn api_model(&self) -> &str {
        self.api_model.as_deref().unwrap_or(&self.model_id)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let invalid = |why: String| GatewayError::InvalidProfile {
            model_id: self.model_id.clone(),
            reason: why,
        };
        if self.model_id.trim().is_empty() {
            return Err(invalid("empty model id".into()));
        }
        if self.prompt_window == 0 || self.completion_window == 0 {
            return Err(invalid("context windows must be > 0".into()));
        }
        if self.input_cost_per_1m.is_negative() || self.output_cost_per_1m.is_negative() {
            return Err(invalid("costs must be >= 0".into()));
        }
        if let Some(policy) = &self.rate_policy {
            policy.validate().map_err(invalid)?;
        }
        Ok(())
    }

    /// Deterministic stand-in with a GPT-4-sized window and zero cost.
    pub fn mock(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            display_name: "Mock (deterministic)".into(),
            release_date: "2024-10".into(),
            input_cost_per_1m: Usd::ZERO,
            output_cost_per_1m: Usd::ZERO,
            prompt_window: 8192,
            completion_window: 8192,
            open_source: true,
            rate_policy: None,
            provider: ProviderKind::Mock,
            api_model: None,
            api_key_env: None,
            available: true,
            note: Some("offline test double".into()),
        }
    }
}

#[derive(Debug, Deserialize)]
struct SeedFile {
    #[serde(default)]
    model: Vec<ModelProfile>,
}

/// Append-only, insertion-ordered model registry. Safe for concurrent use.
#[derive(Debug, Default)]
pub struct ModelRegistry {
    inner: RwLock<Entries>,
}

#[derive(Debug, Default)]
struct Entries {
    order: Vec<Arc<ModelProfile>>,
    by_id: HashMap<String, Arc<ModelProfile>>,
}

impl ModelRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Registry holding the shipped seed.
    pub fn seeded() -> Self {
        Self::from_seed(DEFAULT_SEED).expect("shipped seed is valid")
    }

    pub fn from_seed(toml_text: &str) -> Result<Self, GatewayError> {
        let seed: SeedFile = toml::from_str(toml_text).map_err(|e| GatewayError::InvalidSeed(e.to_string()))?;
        let registry = Self::empty();
        for profile in seed.model {
            registry.register(profile)?;
        }
        Ok(registry)
    }

    pub fn register(&self, profile: ModelProfile) -> Result<(), GatewayError> {
        profile.validate()?;
        let mut entries = self.inner.write().expect("registry lock poisoned");
        if entries.by_id.contains_key(&profile.model_id) {
            return Err(GatewayError::DuplicateModel(profile.model_id));
        }
        let profile = Arc::new(profile);
        entries.by_id.insert(profile.model_id.clone(), Arc::clone(&profile));
        entries.order.push(profile);
        Ok(())
    }

    pub fn lookup(&self, model_id: &str) -> Result<Arc<ModelProfile>, GatewayError> {
        self.inner
            .read()
            .expect("registry lock poisoned")
            .by_id
            .get(model_id)
            .cloned()
            .ok_or_else(|| GatewayError::UnknownModel(model_id.to_owned()))
    }

    pub fn contains(&self, model_id: &str) -> bool {
        self.lookup(model_id).is_ok()
    }

    pub fn list(&self) -> Vec<Arc<ModelProfile>> {
        self.inner.read().expect("registry lock poisoned").order.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("registry lock poisoned").order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_has_eight_models() {
        let registry = ModelRegistry::seeded();
        assert_eq!(registry.len(), 8);
        let gpt4 = registry.lookup("gpt-4").unwrap();
        assert_eq!(gpt4.prompt_window, 8192);
        assert_eq!(gpt4.completion_window, 8192);
    }

    #[test]
    fn gemini_is_free_with_a_rate_policy() {
        let gemini = ModelRegistry::seeded().lookup("gemini-1.5-flash").unwrap();
        assert!(gemini.prompt_window >= 1_000_000);
        assert_eq!(gemini.input_cost_per_1m, Usd::ZERO);
        assert_eq!(gemini.output_cost_per_1m, Usd::ZERO);
        assert_eq!(gemini.rate_policy, Some(RateLimitPolicy::GEMINI_FREE_TIER));
    }

    #[test]
    fn unknown_and_duplicate() {
        let registry = ModelRegistry::seeded();
        assert!(matches!(registry.lookup("nonexistent"), Err(GatewayError::UnknownModel(_))));
        let dup = (*registry.lookup("gpt-4").unwrap()).clone();
        assert!(matches!(registry.register(dup), Err(GatewayError::DuplicateModel(_))));
        registry.register(ModelProfile::mock("mock")).unwrap();
        assert_eq!(registry.len(), 9);
        assert_eq!(registry.list().last().unwrap().model_id, "mock");
    }

    #[test]
    fn llama_is_listed_but_unavailable() {
        let llama = ModelRegistry::seeded().lookup("llama-3.2-3b").unwrap();
        assert!(!llama.available);
        assert!(llama.open_source);
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let mut p = ModelProfile::mock("m");
        p.prompt_window = 0;
        assert!(ModelRegistry::empty().register(p).is_err());
        let mut p = ModelProfile::mock("m");
        p.rate_policy = Some(RateLimitPolicy { requests_per_minute: Some(0), ..Default::default() });
        assert!(ModelRegistry::empty().register(p).is_err());
        let mut p = ModelProfile::mock("m");
        p.input_cost_per_1m = "-1".parse().unwrap();
        assert!(ModelRegistry::empty().register(p).is_err());
        assert!(matches!(ModelRegistry::from_seed("[[model]]\nmodel_id = 1"), Err(GatewayError::InvalidSeed(_))));
    }
}
