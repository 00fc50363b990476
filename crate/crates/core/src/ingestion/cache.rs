use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};

use super::IngestError;
use crate::review::{read_corpus, write_corpus, CorpusHeader, ListingId, ReviewCorpus};

/// Flat-file corpus cache: one `<listing_id>.corpus` file per listing,
/// stamped with an expiry time in its header.
#[derive(Debug, Clone)]
pub struct CorpusCache {
    dir: PathBuf,
    ttl: Duration,
}

impl CorpusCache {
    pub fn new(dir: impl Into<PathBuf>, ttl: Duration) -> Self {
        Self { dir: dir.into(), ttl }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn path_for(&self, listing_id: &ListingId) -> PathBuf {
        self.dir.join(format!("{}.corpus", listing_id.as_str()))
    }

    /// Writes atomically (temp file + rename) and returns the expiry stamp.
    pub fn store(&self, corpus: &ReviewCorpus, now: DateTime<Utc>) -> Result<DateTime<Utc>, IngestError> {
        let ttl = chrono::Duration::from_std(self.ttl).map_err(|e| IngestError::Cache(e.to_string()))?;
        let expires_at = now + ttl;
        std::fs::create_dir_all(&self.dir).map_err(|e| cache_err(&self.dir, e))?;
        let path = self.path_for(&corpus.listing.listing_id);
        let tmp = path.with_extension("corpus.tmp");
        std::fs::write(&tmp, write_corpus(corpus, Some(expires_at))).map_err(|e| cache_err(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| cache_err(&path, e))?;
        Ok(expires_at)
    }

    /// Cached corpus regardless of age.
    pub fn load(&self, listing_id: &ListingId) -> Result<Option<(CorpusHeader, ReviewCorpus)>, IngestError> {
        let path = self.path_for(listing_id);
        match std::fs::read_to_string(&path) {
            Ok(text) => Ok(Some(read_corpus(&text)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(cache_err(&path, e)),
        }
    }

    /// Cached corpus if its expiry stamp is still in the future.
    pub fn load_fresh(&self, listing_id: &ListingId, now: DateTime<Utc>) -> Result<Option<ReviewCorpus>, IngestError> {
        Ok(self
            .load(listing_id)?
            .filter(|(header, _)| header.expires_at.is_some_and(|t| t > now))
            .map(|(_, corpus)| corpus))
    }
}

fn cache_err(path: &Path, e: std::io::Error) -> IngestError {
    IngestError::Cache(format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::review::synthetic::synthetic_corpus;

    #[test]
    fn fresh_until_expiry() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CorpusCache::new(dir.path(), Duration::from_secs(60));
        let corpus = synthetic_corpus(3, 200);
        let id = corpus.listing.listing_id.clone();
        let now = corpus.fetched_at;
        assert!(cache.load_fresh(&id, now).unwrap().is_none());
        let expires = cache.store(&corpus, now).unwrap();
        assert_eq!(expires, now + chrono::Duration::seconds(60));
        assert!(cache.path_for(&id).ends_with(format!("{}.corpus", id.as_str())));
        assert_eq!(cache.load_fresh(&id, now).unwrap(), Some(corpus.clone()));
        assert!(cache.load_fresh(&id, expires).unwrap().is_none());
        assert!(cache.load(&id).unwrap().is_some());
    }
}
