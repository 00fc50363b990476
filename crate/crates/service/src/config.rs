//! Service configuration: defaults, then a TOML file, then environment
//! variables, then command-line flags.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use review_insight::gateway::ModelRegistry;
use review_insight::ingestion::LIVE_SCRAPE_ACKNOWLEDGMENT;
use serde::{Deserialize, Serialize};

pub const ENV_PREFIX: &str = "REVIEW_INSIGHT_";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config file {path}: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
    #[error("invalid value for {key}: {value:?}")]
    InvalidValue { key: String, value: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    /// Every model answers through the deterministic mock backend.
    #[default]
    Mock,
    /// Models call their provider's HTTP API with keys from the environment.
    Live,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    pub default_model: String,
    pub default_language: String,
    pub cache_dir: PathBuf,
    pub cache_ttl_hours: u64,
    pub fixtures_dir: PathBuf,
    pub results_dir: PathBuf,
    pub static_dir: Option<PathBuf>,
    pub default_provider: String,
    /// Provider id → enabled. Providers not listed keep their catalog default.
    pub providers: HashMap<String, bool>,
    pub live_scrape: bool,
    pub scrape_acknowledgment: Option<String>,
    pub llm_mode: LlmMode,
    /// Adds the deterministic `mock` model to the registry.
    pub register_mock_model: bool,
    /// Extra registry seed, in the same format as the built-in one.
    pub models_file: Option<PathBuf>,
    pub bench_listing_url: String,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".parse().unwrap(),
            default_model: "gpt-4o-mini".into(),
            default_language: "en".into(),
            cache_dir: PathBuf::from("cache"),
            cache_ttl_hours: 24,
            fixtures_dir: PathBuf::from("fixtures"),
            results_dir: PathBuf::from("results"),
            static_dir: None,
            default_provider: "fixture".into(),
            providers: HashMap::new(),
            live_scrape: false,
            scrape_acknowledgment: None,
            llm_mode: LlmMode::Mock,
            register_mock_model: true,
            models_file: None,
            bench_listing_url: "https://www.booking.com/hotel/gr/aegean-breeze-suites.html".into(),
        }
    }
}

/// Values given on the command line; `None` leaves the lower layers alone.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub bind: Option<SocketAddr>,
    pub default_model: Option<String>,
    pub default_language: Option<String>,
    pub cache_dir: Option<PathBuf>,
    pub fixtures_dir: Option<PathBuf>,
    pub results_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub llm_mode: Option<LlmMode>,
}

impl ServiceConfig {
    pub fn cache_ttl(&self) -> Duration {
        Duration::from_secs(self.cache_ttl_hours * 3600)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_owned(),
            source,
        })
    }

    /// Layers the file (if any), `env` and `cli` over the defaults.
    pub fn load(
        file: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
        cli: &ConfigOverrides,
    ) -> Result<Self, ConfigError> {
        let mut config = match file {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        config.apply_env(env)?;
        config.apply_overrides(cli);
        Ok(config)
    }

    pub fn apply_env(&mut self, env: impl IntoIterator<Item = (String, String)>) -> Result<(), ConfigError> {
        for (key, value) in env {
            let Some(name) = key.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let invalid = || ConfigError::InvalidValue {
                key: key.clone(),
                value: value.clone(),
            };
            match name {
                "BIND" => self.bind = value.parse().map_err(|_| invalid())?,
                "PORT" => self.bind.set_port(value.parse().map_err(|_| invalid())?),
                "DEFAULT_MODEL" => self.default_model = value,
                "DEFAULT_LANGUAGE" => self.default_language = value,
                "CACHE_DIR" => self.cache_dir = value.into(),
                "CACHE_TTL_HOURS" => self.cache_ttl_hours = value.parse().map_err(|_| invalid())?,
                "FIXTURES_DIR" => self.fixtures_dir = value.into(),
                "RESULTS_DIR" => self.results_dir = value.into(),
                "STATIC_DIR" => self.static_dir = Some(value.into()),
                "DEFAULT_PROVIDER" => self.default_provider = value,
                "LIVE_SCRAPE" => self.live_scrape = parse_bool(&value).ok_or_else(invalid)?,
                "SCRAPE_ACKNOWLEDGMENT" => self.scrape_acknowledgment = Some(value),
                "LLM_MODE" => {
                    self.llm_mode = match value.as_str() {
                        "mock" => LlmMode::Mock,
                        "live" => LlmMode::Live,
                        _ => return Err(invalid()),
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, cli: &ConfigOverrides) {
        let ConfigOverrides {
            bind,
            default_model,
            default_language,
            cache_dir,
            fixtures_dir,
            results_dir,
            static_dir,
            llm_mode,
        } = cli.clone();
        if let Some(v) = bind {
            self.bind = v;
        }
        if let Some(v) = default_model {
            self.default_model = v;
        }
        if let Some(v) = default_language {
            self.default_language = v;
        }
        if let Some(v) = cache_dir {
            self.cache_dir = v;
        }
        if let Some(v) = fixtures_dir {
            self.fixtures_dir = v;
        }
        if let Some(v) = results_dir {
            self.results_dir = v;
        }
        if static_dir.is_some() {
            self.static_dir = static_dir;
        }
        if let Some(v) = llm_mode {
            self.llm_mode = v;
        }
    }

    pub fn validate(&self, registry: &ModelRegistry) -> Result<(), ConfigError> {
        if self.cache_ttl_hours == 0 {
            return Err(ConfigError::Invalid("cache_ttl_hours must be positive".into()));
        }
        if !registry.contains(&self.default_model) {
            return Err(ConfigError::Invalid(format!(
                "default model {:?} is not in the registry",
                self.default_model
            )));
        }
        if !review_insight::insight::is_valid_language(&self.default_language) {
            return Err(ConfigError::Invalid(format!(
                "default language {:?} is not a language code",
                self.default_language
            )));
        }
        Ok(())
    }

    /// Live scraping needs both the flag and the exact acknowledgment text.
    pub fn live_scrape_allowed(&self) -> bool {
        self.live_scrape && self.scrape_acknowledgment.as_deref() == Some(LIVE_SCRAPE_ACKNOWLEDGMENT)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => None,
    }
}
