//! Okapi BM25 over review text.
//!
//! Documents are the concatenated title, positive and negative text of each
//! review. Terms are lowercase runs of alphanumeric characters. The IDF is
//! the non-negative form `ln(1 + (N − df + 0.5) / (df + 0.5))`, so a review
//! scores above zero exactly when it contains a query term. Repeated query
//! terms contribute once per occurrence.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::RetrievalError;
use crate::review::{default_order, Review, ReviewCorpus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedReview {
    pub review_id: String,
    pub score: f64,
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Pluggable relevance ranking. Implementations return every review of the
/// corpus, best first.
pub trait Ranker: Send + Sync {
    fn rank(&self, corpus: &ReviewCorpus, query: &str) -> Result<Vec<RankedReview>, RetrievalError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Bm25Ranker {
    pub params: Bm25Params,
}

impl Ranker for Bm25Ranker {
    fn rank(&self, corpus: &ReviewCorpus, query: &str) -> Result<Vec<RankedReview>, RetrievalError> {
        rank_reviews_bm25(corpus, query, self.params)
    }
}

struct IndexedDoc<'a> {
    review: &'a Review,
    term_freqs: HashMap<String, u32>,
    len: usize,
}

pub struct Bm25Index<'a> {
    docs: Vec<IndexedDoc<'a>>,
    doc_freqs: HashMap<String, u32>,
    avg_len: f64,
    params: Bm25Params,
}

impl<'a> Bm25Index<'a> {
    pub fn build(corpus: &'a ReviewCorpus, params: Bm25Params) -> Self {
        let mut doc_freqs: HashMap<String, u32> = HashMap::new();
        let docs: Vec<IndexedDoc<'a>> = corpus
            .reviews()
            .iter()
            .map(|review| {
                let terms = tokenize(&review.searchable_text());
                let mut term_freqs: HashMap<String, u32> = HashMap::new();
                for t in &terms {
                    *term_freqs.entry(t.clone()).or_default() += 1;
                }
                for t in term_freqs.keys() {
                    *doc_freqs.entry(t.clone()).or_default() += 1;
                }
                IndexedDoc {
                    review,
                    term_freqs,
                    len: terms.len(),
                }
            })
            .collect();
        let total_len: usize = docs.iter().map(|d| d.len).sum();
        let avg_len = if docs.is_empty() {
            0.0
        } else {
            total_len as f64 / docs.len() as f64
        };
        Self {
            docs,
            doc_freqs,
            avg_len,
            params,
        }
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.docs.len() as f64;
        let df = f64::from(self.doc_freqs.get(term).copied().unwrap_or(0));
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    fn score_doc(&self, doc: &IndexedDoc<'_>, terms: &[(String, f64)]) -> f64 {
        let Bm25Params { k1, b } = self.params;
        let norm = if self.avg_len > 0.0 {
            1.0 - b + b * doc.len as f64 / self.avg_len
        } else {
            1.0
        };
        terms
            .iter()
            .map(|(term, idf)| match doc.term_freqs.get(term) {
                Some(&tf) => {
                    let tf = f64::from(tf);
                    idf * tf * (k1 + 1.0) / (tf + k1 * norm)
                }
                None => 0.0,
            })
            .sum()
    }

    /// Full ranking: score descending, ties newest first then by review id.
    pub fn rank(&self, query: &str) -> Result<Vec<RankedReview>, RetrievalError> {
        let terms: Vec<(String, f64)> = tokenize(query)
            .into_iter()
            .map(|t| {
                let idf = self.idf(&t);
                (t, idf)
            })
            .collect();
        if terms.is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let mut scored: Vec<(&Review, f64)> = self
            .docs
            .iter()
            .map(|doc| (doc.review, self.score_doc(doc, &terms)))
            .collect();
        scored.sort_by(|(ra, sa), (rb, sb)| {
            sb.partial_cmp(sa)
                .unwrap_or(Ordering::Equal)
                .then_with(|| default_order(ra, rb))
        });
        Ok(scored
            .into_iter()
            .map(|(r, score)| RankedReview {
                review_id: r.review_id.clone(),
                score,
            })
            .collect())
    }
}

pub fn rank_reviews_bm25(
    corpus: &ReviewCorpus,
    query: &str,
    params: Bm25Params,
) -> Result<Vec<RankedReview>, RetrievalError> {
    Bm25Index::build(corpus, params).rank(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::review::synthetic::synthetic_corpus;
    use crate::review::{validate_listing_url, ReviewerInfo};
    use chrono::{NaiveDate, Utc};

    fn corpus_of(texts: &[&str]) -> ReviewCorpus {
        let listing = validate_listing_url("https://www.booking.com/hotel/gr/x.html").unwrap();
        let reviews = texts
            .iter()
            .enumerate()
            .map(|(i, t)| Review {
                review_id: format!("r{i:02}"),
                listing_id: listing.listing_id.clone(),
                published_at: NaiveDate::from_ymd_opt(2024, 1, 1).unwrap() + chrono::Duration::days(i as i64),
                score: 8.0,
                title: None,
                positive_text: Some((*t).into()),
                negative_text: None,
                manager_reply: None,
                reviewer: ReviewerInfo::default(),
                stay: None,
                likes: 0,
                photo_urls: vec![],
                language_hint: None,
            })
            .collect();
        ReviewCorpus::new(listing, reviews, Utc::now(), "test").unwrap()
    }

    #[test]
    fn tokenizer_lowercases_and_splits_on_punctuation() {
        assert_eq!(tokenize("Wi-Fi was FAST!"), ["wi", "fi", "was", "fast"]);
        assert!(tokenize("  ?! ").is_empty());
    }

    #[test]
    fn single_match_ranks_first_and_others_score_zero() {
        let corpus = corpus_of(&["great view", "free parking nearby", "quiet room", "nice staff"]);
        let ranked = rank_reviews_bm25(&corpus, "parking", Bm25Params::default()).unwrap();
        assert_eq!(ranked[0].review_id, "r01");
        assert!(ranked[0].score > 0.0);
        assert!(ranked[1..].iter().all(|r| r.score == 0.0));
        assert_eq!(ranked.len(), 4);
    }

    #[test]
    fn out_of_vocabulary_query_falls_back_to_recency() {
        let corpus = corpus_of(&["great view", "free parking", "quiet room"]);
        let ranked = rank_reviews_bm25(&corpus, "xyzzy plugh", Bm25Params::default()).unwrap();
        let ids: Vec<_> = ranked.iter().map(|r| r.review_id.as_str()).collect();
        assert_eq!(ids, ["r02", "r01", "r00"]);
        assert!(ranked.iter().all(|r| r.score == 0.0));
    }

    #[test]
    fn empty_query_is_rejected() {
        let corpus = synthetic_corpus(3, 100);
        assert_eq!(
            rank_reviews_bm25(&corpus, " ,. ", Bm25Params::default()),
            Err(RetrievalError::EmptyQuery)
        );
    }
}
