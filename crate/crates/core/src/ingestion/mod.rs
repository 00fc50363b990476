//! Review retrieval from pluggable providers.
//!
//! A provider turns a [`FetchRequest`] into normalized reviews. The
//! [`Ingestor`] wraps every fetch with retries on network failures, a
//! per-listing lock, sorting and truncation to the request, metrics, and a
//! write to the corpus cache.

mod api;
mod cache;
mod catalog;
mod fetch;
mod fixture;
#[cfg(feature = "html")]
mod scraper;

use std::time::Duration;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use api::{ApiProvider, ApiResponseSource, RecordedResponses};
pub use cache::CorpusCache;
pub use catalog::{
    estimate_fetch_cost, record_fetch_comparison, ComparisonRow, FetchComparison, MaintenanceClass, ProviderCatalog,
    ProviderConfig,
};
pub use fetch::{DelayedProvider, Ingestor, RetryPolicy};
pub use fixture::FixtureProvider;
#[cfg(feature = "html")]
pub use scraper::{
    parse_page, parse_reviews_page, ParsedPage, PageSource, ScraperProvider, SnapshotPages, LIVE_SCRAPE_ACKNOWLEDGMENT,
};

use crate::clock::Clock;
use crate::money::Usd;
use crate::review::{Listing, Review, ReviewError};

pub const DEFAULT_MAX_REVIEWS: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("provider {0} is disabled")]
    ProviderDisabled(String),
    #[error("unknown provider: {0}")]
    UnknownProvider(String),
    #[error("network failure: {0}")]
    NetworkFailure(String),
    #[error("no reviews found for listing {0}")]
    NoReviewsFound(String),
    #[error("provider {provider} quota exceeded: fetch costs {needed}, {remaining} left")]
    ProviderQuotaExceeded { provider: String, needed: Usd, remaining: Usd },
    #[error("page layout not recognized: {0}")]
    LayoutNotRecognized(String),
    #[error("invalid fetch request: {0}")]
    InvalidRequest(String),
    #[error("missing credentials: environment variable {0} is not set")]
    MissingCredentials(String),
    #[error(transparent)]
    Review(#[from] ReviewError),
    #[error("cache: {0}")]
    Cache(String),
    #[error("no runs to compare")]
    EmptyInput,
}

impl IngestError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::ProviderDisabled(_) => "ProviderDisabled",
            Self::UnknownProvider(_) => "UnknownProvider",
            Self::NetworkFailure(_) => "NetworkFailure",
            Self::NoReviewsFound(_) => "NoReviewsFound",
            Self::ProviderQuotaExceeded { .. } => "ProviderQuotaExceeded",
            Self::LayoutNotRecognized(_) => "LayoutNotRecognized",
            Self::InvalidRequest(_) => "InvalidRequest",
            Self::MissingCredentials(_) => "MissingCredentials",
            Self::Review(ReviewError::MalformedUrl(_)) => "MalformedUrl",
            Self::Review(ReviewError::UnsupportedHost(_)) => "UnsupportedHost",
            Self::Review(_) => "InvalidReview",
            Self::Cache(_) => "CacheError",
            Self::EmptyInput => "EmptyInput",
        }
    }

    pub fn is_retriable(&self) -> bool {
        matches!(self, Self::NetworkFailure(_))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    #[default]
    NewestFirst,
    ScoreDesc,
    ScoreAsc,
}

impl SortOrder {
    /// Total order over reviews; ties fall back to the corpus default order.
    pub fn compare(self, a: &Review, b: &Review) -> std::cmp::Ordering {
        let by_score = |x: &Review, y: &Review| x.score.total_cmp(&y.score);
        let primary = match self {
            Self::NewestFirst => std::cmp::Ordering::Equal,
            Self::ScoreDesc => by_score(b, a),
            Self::ScoreAsc => by_score(a, b),
        };
        primary.then_with(|| crate::review::default_order(a, b))
    }
}

impl std::str::FromStr for SortOrder {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "newest_first" => Ok(Self::NewestFirst),
            "score_desc" => Ok(Self::ScoreDesc),
            "score_asc" => Ok(Self::ScoreAsc),
            other => Err(IngestError::InvalidRequest(format!("unknown sort order {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchRequest {
    pub listing: Listing,
    pub max_reviews: usize,
    #[serde(default)]
    pub sort: SortOrder,
}

impl FetchRequest {
    pub fn new(listing: Listing) -> Self {
        Self {
            listing,
            max_reviews: DEFAULT_MAX_REVIEWS,
            sort: SortOrder::NewestFirst,
        }
    }

    pub fn with_max_reviews(mut self, max_reviews: usize) -> Self {
        self.max_reviews = max_reviews;
        self
    }

    pub fn with_sort(mut self, sort: SortOrder) -> Self {
        self.sort = sort;
        self
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.max_reviews == 0 {
            return Err(IngestError::InvalidRequest("max_reviews must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchMetrics {
    pub provider: String,
    pub reviews_returned: usize,
    #[serde(rename = "wall_time_s", with = "crate::gateway::duration_secs")]
    pub wall_time: Duration,
    pub monetary_cost: Usd,
    pub pages_fetched: usize,
}

/// What a provider hands back before sorting and truncation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProviderFetch {
    pub reviews: Vec<Review>,
    pub pages_fetched: usize,
}

/// Environment passed to providers for one attempt.
pub struct FetchContext<'a> {
    pub clock: &'a dyn Clock,
    /// Reviews dated after this are rejected.
    pub today: NaiveDate,
}

pub trait ReviewProvider: Send + Sync {
    fn config(&self) -> &ProviderConfig;

    /// One attempt. May return more reviews than requested and in any
    /// order; the caller sorts and truncates.
    fn fetch(&self, request: &FetchRequest, ctx: &FetchContext<'_>) -> Result<ProviderFetch, IngestError>;

    fn id(&self) -> &str {
        &self.config().provider_id
    }
}
