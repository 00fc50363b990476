use chrono::NaiveDate;
use serde::Serialize;

use super::ReviewCorpus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DateRange {
    pub earliest: NaiveDate,
    pub latest: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub count: usize,
    /// `None` when the corpus is empty.
    pub mean_score: Option<f64>,
    /// Buckets `[0,1), [1,2), …, [9,10]`.
    pub score_histogram: [usize; 10],
    pub date_range: Option<DateRange>,
}

pub fn corpus_stats(corpus: &ReviewCorpus) -> CorpusStats {
    let reviews = corpus.reviews();
    let mut histogram = [0usize; 10];
    for r in reviews {
        let bucket = (r.score.floor() as usize).min(9);
        histogram[bucket] += 1;
    }
    let mean_score = (!reviews.is_empty())
        .then(|| reviews.iter().map(|r| r.score).sum::<f64>() / reviews.len() as f64);
    let date_range = reviews
        .iter()
        .map(|r| r.published_at)
        .fold(None, |acc: Option<DateRange>, d| {
            Some(match acc {
                None => DateRange { earliest: d, latest: d },
                Some(range) => DateRange {
                    earliest: range.earliest.min(d),
                    latest: range.latest.max(d),
                },
            })
        });
    CorpusStats {
        count: reviews.len(),
        mean_score,
        score_histogram: histogram,
        date_range,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::review::{validate_listing_url, Review, ReviewCorpus, ReviewerInfo};
    use chrono::Utc;

    fn corpus(scores: &[f64]) -> ReviewCorpus {
        let listing = validate_listing_url("https://www.booking.com/hotel/gr/x.html").unwrap();
        let reviews = scores
            .iter()
            .enumerate()
            .map(|(i, s)| Review {
                review_id: format!("r{i}"),
                listing_id: listing.listing_id.clone(),
                published_at: NaiveDate::from_ymd_opt(2024, 1, 1 + i as u32).unwrap(),
                score: *s,
                title: Some("t".into()),
                positive_text: None,
                negative_text: None,
                manager_reply: None,
                reviewer: ReviewerInfo::default(),
                stay: None,
                likes: 0,
                photo_urls: vec![],
                language_hint: None,
            })
            .collect();
        ReviewCorpus::new(listing, reviews, Utc::now(), "fixture").unwrap()
    }

    #[test]
    fn empty_corpus_has_undefined_mean() {
        let stats = corpus_stats(&corpus(&[]));
        assert_eq!(stats.count, 0);
        assert_eq!(stats.mean_score, None);
        assert_eq!(stats.date_range, None);
    }

    #[test]
    fn means() {
        assert_eq!(corpus_stats(&corpus(&[10.0, 10.0])).mean_score, Some(10.0));
        assert_eq!(corpus_stats(&corpus(&[2.0, 4.0, 9.0])).mean_score, Some(5.0));
    }

    #[test]
    fn histogram_closes_the_top_bucket() {
        let stats = corpus_stats(&corpus(&[0.0, 0.9, 1.0, 9.5, 10.0]));
        assert_eq!(stats.score_histogram, [2, 1, 0, 0, 0, 0, 0, 0, 0, 2]);
        let range = stats.date_range.unwrap();
        assert_eq!(range.earliest.to_string(), "2024-01-01");
        assert_eq!(range.latest.to_string(), "2024-01-05");
    }
}
