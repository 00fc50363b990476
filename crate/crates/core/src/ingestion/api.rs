//! Adapters for the two review-reseller APIs.

use std::path::PathBuf;
use std::sync::Mutex;

use serde_json::Value;

use super::{FetchContext, FetchRequest, IngestError, ProviderConfig, ProviderFetch, ReviewProvider};
use crate::money::Usd;
use crate::review::{normalize_review, Listing, NormalizeContext, ProviderSchema, ReviewError};

/// Raw records for a listing, as the provider would return them.
pub trait ApiResponseSource: Send + Sync {
    fn fetch_records(&self, listing: &Listing, max_reviews: usize) -> Result<Vec<Value>, IngestError>;
}

/// Recorded responses stored as `<root>/<listing_id>/<schema>.json`.
///
/// Arel responses are a bare array of records; Caprolok responses wrap the
/// records in `{"reviews": [...]}`.
#[derive(Debug, Clone)]
pub struct RecordedResponses {
    root: PathBuf,
    schema: ProviderSchema,
}

impl RecordedResponses {
    pub fn new(root: impl Into<PathBuf>, schema: ProviderSchema) -> Self {
        Self {
            root: root.into(),
            schema,
        }
    }
}

impl ApiResponseSource for RecordedResponses {
    fn fetch_records(&self, listing: &Listing, max_reviews: usize) -> Result<Vec<Value>, IngestError> {
        let path = self
            .root
            .join(listing.listing_id.as_str())
            .join(format!("{}.json", self.schema.name()));
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(IngestError::NoReviewsFound(listing.listing_id.to_string()))
            }
            Err(e) => return Err(IngestError::NetworkFailure(format!("{}: {e}", path.display()))),
        };
        let doc: Value = serde_json::from_str(&text).map_err(|e| schema_error(self.schema, e))?;
        let records = match (self.schema, doc) {
            (ProviderSchema::Arel, Value::Array(items)) => items,
            (ProviderSchema::Caprolok, Value::Object(mut obj)) => match obj.remove("reviews") {
                Some(Value::Array(items)) => items,
                _ => return Err(schema_error(self.schema, "missing `reviews` array")),
            },
            _ => return Err(schema_error(self.schema, "unexpected document shape")),
        };
        Ok(records.into_iter().take(max_reviews).collect())
    }
}

fn schema_error(schema: ProviderSchema, why: impl std::fmt::Display) -> IngestError {
    IngestError::Review(ReviewError::SchemaMismatch {
        schema: schema.name(),
        field: format!("<document>: {why}"),
    })
}

pub struct ApiProvider {
    config: ProviderConfig,
    schema: ProviderSchema,
    source: Box<dyn ApiResponseSource>,
    score_scale: f64,
    /// Remaining prepaid credit; `None` means unmetered.
    credit: Mutex<Option<Usd>>,
}

impl ApiProvider {
    pub fn new(config: ProviderConfig, schema: ProviderSchema, source: Box<dyn ApiResponseSource>) -> Self {
        Self {
            config,
            schema,
            source,
            score_scale: 10.0,
            credit: Mutex::new(None),
        }
    }

    pub fn with_credit(self, credit: Usd) -> Self {
        *self.credit.lock().expect("credit lock poisoned") = Some(credit);
        self
    }

    /// Top of the provider's score scale; scores are rescaled to 0..=10.
    pub fn with_score_scale(mut self, scale: f64) -> Self {
        self.score_scale = scale;
        self
    }

    pub fn remaining_credit(&self) -> Option<Usd> {
        *self.credit.lock().expect("credit lock poisoned")
    }
}

impl ReviewProvider for ApiProvider {
    fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn fetch(&self, request: &FetchRequest, ctx: &FetchContext<'_>) -> Result<ProviderFetch, IngestError> {
        let mut credit = self.credit.lock().expect("credit lock poisoned");
        if let Some(remaining) = *credit {
            let needed = self.config.cost_for(request.max_reviews as u64);
            if needed > remaining {
                return Err(IngestError::ProviderQuotaExceeded {
                    provider: self.config.provider_id.clone(),
                    needed,
                    remaining,
                });
            }
        }
        let records = self.source.fetch_records(&request.listing, request.max_reviews)?;
        if let Some(remaining) = credit.as_mut() {
            *remaining = Usd::new(remaining.amount() - self.config.cost_for(records.len() as u64).amount());
        }
        drop(credit);

        let mut norm = NormalizeContext::new(request.listing.listing_id.clone(), ctx.today);
        norm.score_scale = self.score_scale;
        let mut reviews = Vec::with_capacity(records.len());
        for record in &records {
            match normalize_review(record, self.schema, &norm) {
                Ok(review) => reviews.push(review),
                // Score-only reviews carry nothing to summarize.
                Err(ReviewError::EmptyReview(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        Ok(ProviderFetch {
            reviews,
            pages_fetched: 1,
        })
    }
}
