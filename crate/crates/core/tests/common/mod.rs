#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use review_insight::ingestion::{FixtureProvider, Ingestor, ProviderCatalog, FetchRequest};
use review_insight::review::{validate_listing_url, Listing, ReviewCorpus};
use review_insight::SimulatedClock;

pub const FIXTURE_URL: &str = "https://www.booking.com/hotel/gr/aegean-breeze-suites.html";

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn snapshot(name: &str) -> PathBuf {
    fixtures_dir().join("snapshots").join(name)
}

pub fn fixture_listing() -> Listing {
    validate_listing_url(FIXTURE_URL).unwrap()
}

pub fn fixture_corpus() -> ReviewCorpus {
    let clock = SimulatedClock::at_default_epoch();
    let provider = FixtureProvider::new(
        ProviderCatalog::builtin().get("fixture").unwrap().clone(),
        fixtures_dir(),
    );
    Ingestor::new(Arc::new(clock))
        .fetch_reviews(&FetchRequest::new(fixture_listing()), &provider)
        .unwrap()
        .0
}
pub mod oracle;
