use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::ingestion::{FetchRequest, Ingestor, MaintenanceClass, ReviewProvider};
use crate::money::Usd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRow {
    pub provider: String,
    pub display_name: String,
    #[serde(default, with = "crate::gateway::duration_secs")]
    pub wall_time: Duration,
    pub reviews_returned: usize,
    pub cost_per_1000: Usd,
    pub fetch_cost: Usd,
    pub maintenance: MaintenanceClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalBenchReport {
    pub requested_reviews: usize,
    pub rows: Vec<RetrievalRow>,
}

/// One timed fetch per provider, in the given order.
pub fn run_retrieval_bench(
    providers: &[Arc<dyn ReviewProvider>],
    request: &FetchRequest,
    ingestor: &Ingestor,
) -> Result<RetrievalBenchReport, BenchError> {
    if providers.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let rows = providers
        .iter()
        .map(|provider| {
            let config = provider.config();
            let started = ingestor.clock().monotonic();
            let outcome = ingestor.fetch_reviews(request, provider.as_ref());
            let mut row = RetrievalRow {
                provider: config.provider_id.clone(),
                display_name: config.display_name.clone(),
                wall_time: ingestor.clock().monotonic().saturating_sub(started),
                reviews_returned: 0,
                cost_per_1000: config.cost_per_1000_reviews,
                fetch_cost: Usd::ZERO,
                maintenance: config.maintenance,
                error: None,
            };
            match outcome {
                Ok((_, metrics)) => {
                    row.wall_time = metrics.wall_time;
                    row.reviews_returned = metrics.reviews_returned;
                    row.fetch_cost = metrics.monetary_cost;
                }
                Err(e) => row.error = Some(e.kind().to_owned()),
            }
            row
        })
        .collect();
    Ok(RetrievalBenchReport {
        requested_reviews: request.max_reviews,
        rows,
    })
}
