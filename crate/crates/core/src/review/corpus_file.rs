//! Line-delimited on-disk corpus format.
//!
//! The first line is a [`CorpusHeader`]; every following line is one
//! [`Review`] serialized with its schema field names. Reviews keep the
//! corpus order.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Listing, Review, ReviewCorpus, ReviewError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub listing: Listing,
    pub fetched_at: DateTime<Utc>,
    pub source: String,
    pub review_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expires_at: Option<DateTime<Utc>>,
}

pub fn write_corpus(corpus: &ReviewCorpus, expires_at: Option<DateTime<Utc>>) -> String {
    let header = CorpusHeader {
        listing: corpus.listing.clone(),
        fetched_at: corpus.fetched_at,
        source: corpus.source.clone(),
        review_count: corpus.len(),
        expires_at,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for review in corpus.reviews() {
        out.push_str(&serde_json::to_string(review).expect("review serializes"));
        out.push('\n');
    }
    out
}

pub fn read_corpus(text: &str) -> Result<(CorpusHeader, ReviewCorpus), ReviewError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| ReviewError::CorpusFormat("empty document".into()))?;
    let header: CorpusHeader = serde_json::from_str(first)
        .map_err(|e| ReviewError::CorpusFormat(format!("line 1: header: {e}")))?;
    let reviews = lines
        .map(|(i, line)| {
            serde_json::from_str::<Review>(line)
                .map_err(|e| ReviewError::CorpusFormat(format!("line {}: {e}", i + 1)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if reviews.len() != header.review_count {
        return Err(ReviewError::CorpusFormat(format!(
            "header declares {} reviews, found {}",
            header.review_count,
            reviews.len()
        )));
    }
    let corpus = ReviewCorpus::with_order(
        header.listing.clone(),
        reviews,
        header.fetched_at,
        header.source.clone(),
    )?;
    Ok((header, corpus))
}
