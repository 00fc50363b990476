use std::time::Duration;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};

use super::{FetchMetrics, IngestError};
use crate::money::Usd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintenanceClass {
    None,
    Low,
    High,
}

impl MaintenanceClass {
    pub fn label(self) -> &'static str {
        match self {
            Self::None => "None",
            Self::Low => "Low",
            Self::High => "High",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub provider_id: String,
    pub display_name: String,
    pub cost_per_1000_reviews: Usd,
    /// Name of the environment variable holding the API key, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credentials_env: Option<String>,
    pub enabled: bool,
    pub maintenance: MaintenanceClass,
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.cost_per_1000_reviews.is_negative() {
            return Err(IngestError::InvalidRequest(format!(
                "provider {} has a negative cost",
                self.provider_id
            )));
        }
        Ok(())
    }

    pub fn cost_for(&self, n_reviews: u64) -> Usd {
        self.cost_per_1000_reviews.scale(n_reviews, 1000)
    }
}

fn usd(cents: i64) -> Usd {
    Usd::new(Decimal::new(cents, 2))
}

/// Known providers with their pricing and maintenance class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderCatalog {
    providers: Vec<ProviderConfig>,
}

impl ProviderCatalog {
    pub fn new(providers: Vec<ProviderConfig>) -> Result<Self, IngestError> {
        for (i, p) in providers.iter().enumerate() {
            p.validate()?;
            if providers[..i].iter().any(|q| q.provider_id == p.provider_id) {
                return Err(IngestError::InvalidRequest(format!("duplicate provider {}", p.provider_id)));
            }
        }
        Ok(Self { providers })
    }

    /// The three retrieval methods compared in the evaluation plus the
    /// offline fixture provider. Only the offline ones start enabled.
    pub fn builtin() -> Self {
        let entry = |id: &str, name: &str, cost: Usd, env: Option<&str>, enabled, maintenance| ProviderConfig {
            provider_id: id.into(),
            display_name: name.into(),
            cost_per_1000_reviews: cost,
            credentials_env: env.map(Into::into),
            enabled,
            maintenance,
        };
        Self {
            providers: vec![
                entry("arel", "Arel Venture API", usd(150), Some("AREL_API_TOKEN"), true, MaintenanceClass::None),
                entry(
                    "caprolok",
                    "Caprolok API",
                    usd(100),
                    Some("CAPROLOK_API_KEY"),
                    true,
                    MaintenanceClass::None,
                ),
                entry("scraper", "Web scraper", Usd::ZERO, None, true, MaintenanceClass::High),
                entry("fixture", "Fixture corpus", Usd::ZERO, None, true, MaintenanceClass::None),
            ],
        }
    }

    pub fn get(&self, provider_id: &str) -> Result<&ProviderConfig, IngestError> {
        self.providers
            .iter()
            .find(|p| p.provider_id == provider_id)
            .ok_or_else(|| IngestError::UnknownProvider(provider_id.to_owned()))
    }

    pub fn get_mut(&mut self, provider_id: &str) -> Result<&mut ProviderConfig, IngestError> {
        self.providers
            .iter_mut()
            .find(|p| p.provider_id == provider_id)
            .ok_or_else(|| IngestError::UnknownProvider(provider_id.to_owned()))
    }

    pub fn list(&self) -> &[ProviderConfig] {
        &self.providers
    }
}

/// Linear price of fetching `n_reviews`, in exact decimal arithmetic.
pub fn estimate_fetch_cost(catalog: &ProviderCatalog, provider_id: &str, n_reviews: u64) -> Result<Usd, IngestError> {
    Ok(catalog.get(provider_id)?.cost_for(n_reviews))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub provider: String,
    pub runs: usize,
    #[serde(rename = "mean_wall_time_s", with = "crate::gateway::duration_secs")]
    pub mean_wall_time: Duration,
    pub mean_reviews: f64,
    /// Observed spend per 1000 reviews; `None` when no reviews came back.
    pub cost_per_1000: Option<Usd>,
    /// `None` when the runs took no measurable time.
    pub reviews_per_sec: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchComparison {
    pub rows: Vec<ComparisonRow>,
}

/// Aggregates runs per provider, in order of first appearance.
pub fn record_fetch_comparison(runs: &[FetchMetrics]) -> Result<FetchComparison, IngestError> {
    if runs.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut order: Vec<&str> = Vec::new();
    for run in runs {
        if !order.contains(&run.provider.as_str()) {
            order.push(&run.provider);
        }
    }
    let rows = order
        .into_iter()
        .map(|provider| {
            let mine: Vec<&FetchMetrics> = runs.iter().filter(|r| r.provider == provider).collect();
            let n = mine.len() as u32;
            let total_time: Duration = mine.iter().map(|r| r.wall_time).sum();
            let total_reviews: usize = mine.iter().map(|r| r.reviews_returned).sum();
            let total_cost: Usd = mine.iter().map(|r| r.monetary_cost).sum();
            ComparisonRow {
                provider: provider.to_owned(),
                runs: mine.len(),
                mean_wall_time: total_time / n,
                mean_reviews: total_reviews as f64 / f64::from(n),
                cost_per_1000: (total_reviews > 0).then(|| total_cost.scale(1000, total_reviews as u64)),
                reviews_per_sec: (!total_time.is_zero()).then(|| total_reviews as f64 / total_time.as_secs_f64()),
            }
        })
        .collect();
    Ok(FetchComparison { rows })
}
