use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::{
    CorpusCache, FetchContext, FetchMetrics, FetchRequest, IngestError, ProviderConfig, ProviderFetch,
    ReviewProvider,
};
use crate::clock::Clock;
use crate::review::{ListingId, ReviewCorpus};

/// Retries apply to network failures only. The first attempt is not
/// counted; `backoff[i]` is slept before retry `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    pub backoff: Vec<Duration>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            backoff: vec![Duration::from_secs(1), Duration::from_secs(2), Duration::from_secs(4)],
        }
    }
}

impl RetryPolicy {
    pub fn none() -> Self {
        Self { backoff: Vec::new() }
    }
}

pub struct Ingestor {
    clock: Arc<dyn Clock>,
    cache: Option<CorpusCache>,
    retry: RetryPolicy,
    locks: Mutex<HashMap<ListingId, Arc<Mutex<()>>>>,
}

impl Ingestor {
    pub fn new(clock: Arc<dyn Clock>) -> Self {
        Self {
            clock,
            cache: None,
            retry: RetryPolicy::default(),
            locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(mut self, cache: CorpusCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn cache(&self) -> Option<&CorpusCache> {
        self.cache.as_ref()
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    fn listing_lock(&self, id: &ListingId) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(id.clone()).or_default().clone()
    }

    /// Fetches, sorts and truncates to the request, then writes the result
    /// to the cache. Fetches of the same listing are serialized.
    pub fn fetch_reviews(
        &self,
        request: &FetchRequest,
        provider: &dyn ReviewProvider,
    ) -> Result<(ReviewCorpus, FetchMetrics), IngestError> {
        request.validate()?;
        let config = provider.config();
        if !config.enabled {
            return Err(IngestError::ProviderDisabled(config.provider_id.clone()));
        }
        let lock = self.listing_lock(&request.listing.listing_id);
        let _guard = lock.lock().unwrap_or_else(|poisoned| poisoned.into_inner());

        let started = self.clock.monotonic();
        let ctx = FetchContext {
            clock: self.clock.as_ref(),
            today: self.clock.utc().date_naive(),
        };
        let fetched = self.fetch_with_retry(request, provider, &ctx)?;

        let mut seen = HashSet::new();
        let mut reviews = Vec::with_capacity(fetched.reviews.len());
        for review in fetched.reviews {
            review.validate(ctx.today)?;
            if review.listing_id != request.listing.listing_id {
                return Err(IngestError::InvalidRequest(format!(
                    "provider returned review {} of another listing",
                    review.review_id
                )));
            }
            if seen.insert(review.review_id.clone()) {
                reviews.push(review);
            }
        }
        reviews.sort_by(|a, b| request.sort.compare(a, b));
        reviews.truncate(request.max_reviews);
        if reviews.is_empty() {
            return Err(IngestError::NoReviewsFound(request.listing.listing_id.to_string()));
        }

        let corpus = ReviewCorpus::with_order(
            request.listing.clone(),
            reviews,
            self.clock.utc(),
            config.provider_id.clone(),
        )?;
        let metrics = FetchMetrics {
            provider: config.provider_id.clone(),
            reviews_returned: corpus.len(),
            wall_time: self.clock.monotonic().saturating_sub(started),
            monetary_cost: config.cost_for(corpus.len() as u64),
            pages_fetched: fetched.pages_fetched,
        };
        if let Some(cache) = &self.cache {
            cache.store(&corpus, self.clock.utc())?;
        }
        Ok((corpus, metrics))
    }

    fn fetch_with_retry(
        &self,
        request: &FetchRequest,
        provider: &dyn ReviewProvider,
        ctx: &FetchContext<'_>,
    ) -> Result<ProviderFetch, IngestError> {
        let mut backoff = self.retry.backoff.iter();
        loop {
            match provider.fetch(request, ctx) {
                Err(e) if e.is_retriable() => match backoff.next() {
                    Some(wait) => self.clock.sleep(*wait),
                    None => return Err(e),
                },
                other => return other,
            }
        }
    }
}

/// Adds a fixed latency to every fetch, measured on the fetch clock.
pub struct DelayedProvider {
    inner: Arc<dyn ReviewProvider>,
    delay: Duration,
}

impl DelayedProvider {
    pub fn new(inner: Arc<dyn ReviewProvider>, delay: Duration) -> Self {
        Self { inner, delay }
    }
}

impl ReviewProvider for DelayedProvider {
    fn config(&self) -> &ProviderConfig {
        self.inner.config()
    }

    fn fetch(&self, request: &FetchRequest, ctx: &FetchContext<'_>) -> Result<ProviderFetch, IngestError> {
        ctx.clock.sleep(self.delay);
        self.inner.fetch(request, ctx)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::clock::SimulatedClock;
    use crate::ingestion::{ProviderCatalog, SortOrder};
    use crate::review::synthetic::synthetic_corpus;

    struct Flaky {
        config: ProviderConfig,
        failures: usize,
        calls: AtomicUsize,
        corpus: ReviewCorpus,
    }

    impl ReviewProvider for Flaky {
        fn config(&self) -> &ProviderConfig {
            &self.config
        }

        fn fetch(&self, _: &FetchRequest, _: &FetchContext<'_>) -> Result<ProviderFetch, IngestError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                return Err(IngestError::NetworkFailure("connection reset".into()));
            }
            Ok(ProviderFetch {
                reviews: self.corpus.reviews().to_vec(),
                pages_fetched: 2,
            })
        }
    }

    fn flaky(failures: usize, n: usize) -> Flaky {
        Flaky {
            config: ProviderCatalog::builtin().get("arel").unwrap().clone(),
            failures,
            calls: AtomicUsize::new(0),
            corpus: synthetic_corpus(n, 200),
        }
    }

    #[test]
    fn retries_with_backoff_on_the_injected_clock() {
        let clock = SimulatedClock::at_default_epoch();
        let ingestor = Ingestor::new(Arc::new(clock.clone()));
        let provider = flaky(3, 10);
        let request = FetchRequest::new(provider.corpus.listing.clone());
        let (corpus, metrics) = ingestor.fetch_reviews(&request, &provider).unwrap();
        assert_eq!(corpus.len(), 10);
        assert_eq!(provider.calls.load(Ordering::SeqCst), 4);
        assert_eq!(metrics.wall_time, Duration::from_secs(7));
        assert_eq!(metrics.pages_fetched, 2);
        assert_eq!(metrics.monetary_cost, ProviderCatalog::builtin().get("arel").unwrap().cost_for(10));

        let provider = flaky(4, 10);
        let err = ingestor.fetch_reviews(&request, &provider).unwrap_err();
        assert_eq!(err.kind(), "NetworkFailure");
        assert_eq!(provider.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn sorts_truncates_and_caches() {
        let dir = tempfile::tempdir().unwrap();
        let clock = SimulatedClock::at_default_epoch();
        let ingestor = Ingestor::new(Arc::new(clock.clone()))
            .with_cache(CorpusCache::new(dir.path(), Duration::from_secs(3600)));
        let provider = flaky(0, 30);
        let listing = provider.corpus.listing.clone();

        let (newest, _) = ingestor
            .fetch_reviews(&FetchRequest::new(listing.clone()).with_max_reviews(5), &provider)
            .unwrap();
        assert_eq!(newest.reviews(), &provider.corpus.reviews()[..5]);
        let cached = ingestor.cache().unwrap().load_fresh(&listing.listing_id, clock.utc()).unwrap();
        assert_eq!(cached, Some(newest));

        let (by_score, _) = ingestor
            .fetch_reviews(
                &FetchRequest::new(listing).with_sort(SortOrder::ScoreAsc),
                &provider,
            )
            .unwrap();
        assert!(by_score.reviews().windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn disabled_empty_and_invalid_requests() {
        let ingestor = Ingestor::new(Arc::new(SimulatedClock::at_default_epoch()));
        let mut provider = flaky(0, 0);
        let request = FetchRequest::new(provider.corpus.listing.clone());
        assert_eq!(ingestor.fetch_reviews(&request, &provider).unwrap_err().kind(), "NoReviewsFound");
        assert_eq!(
            ingestor
                .fetch_reviews(&request.clone().with_max_reviews(0), &provider)
                .unwrap_err()
                .kind(),
            "InvalidRequest"
        );
        provider.config.enabled = false;
        assert_eq!(ingestor.fetch_reviews(&request, &provider).unwrap_err().kind(), "ProviderDisabled");
        assert_eq!(provider.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn delayed_provider_advances_simulated_time() {
        let clock = SimulatedClock::at_default_epoch();
        let ingestor = Ingestor::new(Arc::new(clock.clone()));
        let inner: Arc<dyn ReviewProvider> = Arc::new(flaky(0, 5));
        let listing = synthetic_corpus(1, 200).listing;
        let delayed = DelayedProvider::new(inner, Duration::from_millis(250));
        let (_, metrics) = ingestor.fetch_reviews(&FetchRequest::new(listing), &delayed).unwrap();
        assert_eq!(metrics.wall_time, Duration::from_millis(250));
    }
}
