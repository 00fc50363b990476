use std::path::PathBuf;

use super::{FetchContext, FetchRequest, IngestError, ProviderConfig, ProviderFetch, ReviewProvider};
use crate::review::read_corpus;

/// Serves `<root>/<listing_id>/reviews.corpus` files.
pub struct FixtureProvider {
    config: ProviderConfig,
    root: PathBuf,
}

impl FixtureProvider {
    pub fn new(config: ProviderConfig, root: impl Into<PathBuf>) -> Self {
        Self {
            config,
            root: root.into(),
        }
    }
}

impl ReviewProvider for FixtureProvider {
    fn config(&self) -> &ProviderConfig {
        &self.config
    }

    fn fetch(&self, request: &FetchRequest, ctx: &FetchContext<'_>) -> Result<ProviderFetch, IngestError> {
        let id = request.listing.listing_id.as_str();
        let path = self.root.join(id).join("reviews.corpus");
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(IngestError::NoReviewsFound(id.into())),
            Err(e) => return Err(IngestError::NetworkFailure(format!("{}: {e}", path.display()))),
        };
        let (_, corpus) = read_corpus(&text)?;
        for review in corpus.reviews() {
            review.validate(ctx.today)?;
        }
        Ok(ProviderFetch {
            reviews: corpus.reviews().to_vec(),
            pages_fetched: 1,
        })
    }
}
