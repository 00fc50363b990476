//! Deterministic synthetic corpora with fixed per-review rendered size.

use chrono::{DateTime, NaiveDate, Utc};

use super::{validate_listing_url, Review, ReviewCorpus, ReviewerInfo};
use crate::retrieval::render_block;

pub const SYNTHETIC_LISTING_URL: &str = "https://www.booking.com/hotel/gr/synthetic-suites.html";

const WORDS: &[&str] = &[
    "room", "clean", "staff", "friendly", "breakfast", "location", "quiet", "view", "bed", "comfortable",
    "beach", "walk", "shower", "spacious", "helpful", "balcony", "kitchen", "modern", "value", "centre",
    "pool", "garden", "coffee", "towels", "check", "host", "stay", "city", "nights", "great",
];

/// `n` reviews whose rendered context block is exactly `block_chars`
/// characters, listed newest first.
///
/// Each review carries only a positive text. Panics if `block_chars` is too
/// small to hold the framing lines.
pub fn synthetic_corpus(n: usize, block_chars: usize) -> ReviewCorpus {
    let listing = validate_listing_url(SYNTHETIC_LISTING_URL).expect("valid literal");
    let newest = NaiveDate::from_ymd_opt(2024, 9, 30).expect("valid literal");
    let reviews = (0..n)
        .map(|i| {
            let mut review = Review {
                review_id: format!("syn-{i:05}"),
                listing_id: listing.listing_id.clone(),
                published_at: newest - chrono::Duration::days(i as i64),
                score: 6.0 + (i % 5) as f64 * 0.5,
                title: None,
                positive_text: Some("x".into()),
                negative_text: None,
                manager_reply: None,
                reviewer: ReviewerInfo::default(),
                stay: None,
                likes: 0,
                photo_urls: Vec::new(),
                language_hint: Some("en".into()),
            };
            let framing = render_block(&review).chars().count() - 1;
            assert!(block_chars > framing, "block of {block_chars} chars cannot hold framing of {framing}");
            review.positive_text = Some(filler(i, block_chars - framing));
            review
        })
        .collect();
    let fetched_at: DateTime<Utc> = DateTime::parse_from_rfc3339("2024-10-01T00:00:00Z")
        .expect("valid literal")
        .with_timezone(&Utc);
    ReviewCorpus::new(listing, reviews, fetched_at, "synthetic").expect("ids are unique")
}

fn filler(seed: usize, len: usize) -> String {
    let mut text = String::with_capacity(len + 12);
    let mut k = seed;
    while text.len() < len {
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(WORDS[k % WORDS.len()]);
        k = k.wrapping_mul(31).wrapping_add(7);
    }
    text.truncate(len);
    if text.ends_with(' ') {
        text.pop();
        text.push('s');
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_block_has_the_requested_size() {
        let corpus = synthetic_corpus(200, 440);
        assert_eq!(corpus.len(), 200);
        for review in corpus.reviews() {
            assert_eq!(render_block(review).chars().count(), 440);
        }
    }
}
