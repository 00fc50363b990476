//! Normalized listing and review model shared by every provider.

mod corpus_file;
mod normalize;
mod stats;
pub mod synthetic;
mod url;

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use corpus_file::{read_corpus, write_corpus, CorpusHeader};
pub use normalize::{denormalize_review, normalize_review, NormalizeContext, ProviderSchema};
pub use stats::{corpus_stats, CorpusStats, DateRange};
pub use url::validate_listing_url;

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum ReviewError {
    #[error("malformed url: {0}")]
    MalformedUrl(String),
    #[error("unsupported host: {0}")]
    UnsupportedHost(String),
    #[error("record does not match the {schema} schema: missing or invalid `{field}`")]
    SchemaMismatch { schema: &'static str, field: String },
    #[error("score {0} is outside 0..=10")]
    ScoreOutOfRange(f64),
    #[error("review {0} has no title, positive or negative text")]
    EmptyReview(String),
    #[error("review {review_id} is dated {date}, after the ingestion date {today}")]
    FutureDate {
        review_id: String,
        date: NaiveDate,
        today: NaiveDate,
    },
    #[error("invalid country code: {0}")]
    InvalidCountry(String),
    #[error("inconsistent stay: {0}")]
    InvalidStay(String),
    #[error("duplicate review id in corpus: {0}")]
    DuplicateReviewId(String),
    #[error("corpus file: {0}")]
    CorpusFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Booking,
}

/// Stable identifier derived from a canonical listing URL.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ListingId(String);

impl ListingId {
    /// First 16 hex digits of SHA-256 over the canonical URL.
    pub fn from_canonical_url(url: &str) -> Self {
        let digest = Sha256::digest(url.as_bytes());
        Self(hex(&digest[..8]))
    }

    /// Accepts an already-derived id (16 lowercase hex digits).
    pub fn parse(raw: &str) -> Option<Self> {
        (raw.len() == 16 && raw.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')))
            .then(|| Self(raw.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ListingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    use std::fmt::Write;
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Listing {
    pub url: String,
    pub listing_id: ListingId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub platform: Platform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewerType {
    Solo,
    Couple,
    Family,
    Group,
    Business,
    Unknown,
}

impl ReviewerType {
    /// Maps the free-text traveller labels used by the platform and its
    /// API resellers.
    pub fn from_label(label: &str) -> Self {
        let label = label.trim().to_ascii_lowercase();
        match label.as_str() {
            "solo" | "solo traveller" | "solo traveler" | "solo_traveller" => Self::Solo,
            "couple" | "couples" => Self::Couple,
            "family" | "families" | "family with young children" | "family with older children" => {
                Self::Family
            }
            "group" | "group of friends" | "groups" => Self::Group,
            "business" | "business traveller" | "business traveler" | "business_traveller" => {
                Self::Business
            }
            _ => Self::Unknown,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Solo => "Solo traveller",
            Self::Couple => "Couple",
            Self::Family => "Family",
            Self::Group => "Group",
            Self::Business => "Business traveller",
            Self::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewerInfo {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub username: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub country: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reviewer_type: Option<ReviewerType>,
}

impl ReviewerInfo {
    pub fn is_empty(&self) -> bool {
        self.username.is_none() && self.country.is_none() && self.reviewer_type.is_none()
    }
}

/// Uppercases and checks a two-letter country code.
pub fn normalize_country(raw: &str) -> Result<String, ReviewError> {
    let code = raw.trim();
    if code.len() == 2 && code.bytes().all(|b| b.is_ascii_alphabetic()) {
        Ok(code.to_ascii_uppercase())
    } else {
        Err(ReviewError::InvalidCountry(raw.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StayInfo {
    pub nights: u32,
    pub check_in: NaiveDate,
    pub check_out: NaiveDate,
}

impl StayInfo {
    pub fn new(nights: u32, check_in: NaiveDate, check_out: NaiveDate) -> Result<Self, ReviewError> {
        if check_out <= check_in {
            return Err(ReviewError::InvalidStay(format!(
                "check-out {check_out} is not after check-in {check_in}"
            )));
        }
        let days = (check_out - check_in).num_days();
        if nights == 0 || i64::from(nights) != days {
            return Err(ReviewError::InvalidStay(format!(
                "{nights} nights but {days} days between {check_in} and {check_out}"
            )));
        }
        Ok(Self {
            nights,
            check_in,
            check_out,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Review {
    pub review_id: String,
    pub listing_id: ListingId,
    pub published_at: NaiveDate,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manager_reply: Option<String>,
    #[serde(default)]
    pub reviewer: ReviewerInfo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stay: Option<StayInfo>,
    #[serde(default)]
    pub likes: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub photo_urls: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_hint: Option<String>,
}

impl Review {
    /// Checks the invariants every constructor path must uphold.
    pub fn validate(&self, today: NaiveDate) -> Result<(), ReviewError> {
        if !(0.0..=10.0).contains(&self.score) || self.score.is_nan() {
            return Err(ReviewError::ScoreOutOfRange(self.score));
        }
        let has_text = [&self.title, &self.positive_text, &self.negative_text]
            .iter()
            .any(|t| t.as_deref().is_some_and(|t| !t.trim().is_empty()));
        if !has_text {
            return Err(ReviewError::EmptyReview(self.review_id.clone()));
        }
        if self.published_at > today {
            return Err(ReviewError::FutureDate {
                review_id: self.review_id.clone(),
                date: self.published_at,
                today,
            });
        }
        if let Some(country) = &self.reviewer.country {
            if normalize_country(country)? != *country {
                return Err(ReviewError::InvalidCountry(country.clone()));
            }
        }
        if let Some(stay) = self.stay {
            StayInfo::new(stay.nights, stay.check_in, stay.check_out)?;
        }
        Ok(())
    }

    /// Title, positive and negative text joined for lexical indexing.
    pub fn searchable_text(&self) -> String {
        [&self.title, &self.positive_text, &self.negative_text]
            .into_iter()
            .flatten()
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Corpus default order: newest first, ties by ascending review id.
pub fn default_order(a: &Review, b: &Review) -> Ordering {
    b.published_at
        .cmp(&a.published_at)
        .then_with(|| a.review_id.cmp(&b.review_id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewCorpus {
    pub listing: Listing,
    reviews: Vec<Review>,
    pub fetched_at: DateTime<Utc>,
    pub source: String,
}

impl ReviewCorpus {
    /// Builds a corpus in default order. Review ids must be unique.
    pub fn new(
        listing: Listing,
        mut reviews: Vec<Review>,
        fetched_at: DateTime<Utc>,
        source: impl Into<String>,
    ) -> Result<Self, ReviewError> {
        let mut seen = HashSet::with_capacity(reviews.len());
        for review in &reviews {
            if !seen.insert(review.review_id.as_str()) {
                return Err(ReviewError::DuplicateReviewId(review.review_id.clone()));
            }
        }
        reviews.sort_by(default_order);
        Ok(Self {
            listing,
            reviews,
            fetched_at,
            source: source.into(),
        })
    }

    /// Wraps reviews whose order was already decided by the caller
    /// (e.g. a score-sorted fetch).
    pub(crate) fn with_order(
        listing: Listing,
        reviews: Vec<Review>,
        fetched_at: DateTime<Utc>,
        source: impl Into<String>,
    ) -> Result<Self, ReviewError> {
        let mut seen = HashSet::with_capacity(reviews.len());
        for review in &reviews {
            if !seen.insert(review.review_id.as_str()) {
                return Err(ReviewError::DuplicateReviewId(review.review_id.clone()));
            }
        }
        Ok(Self {
            listing,
            reviews,
            fetched_at,
            source: source.into(),
        })
    }

    pub fn reviews(&self) -> &[Review] {
        &self.reviews
    }

    pub fn len(&self) -> usize {
        self.reviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reviews.is_empty()
    }

    pub fn get(&self, review_id: &str) -> Option<&Review> {
        self.reviews.iter().find(|r| r.review_id == review_id)
    }

    /// Reviews re-sorted into default order.
    pub fn in_default_order(&self) -> Vec<&Review> {
        let mut refs: Vec<&Review> = self.reviews.iter().collect();
        refs.sort_by(|a, b| default_order(a, b));
        refs
    }

    /// Content digest over the reviews, independent of fetch time and source.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for review in self.in_default_order() {
            let line = serde_json::to_string(review).expect("review serializes");
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        hex(&hasher.finalize()[..16])
    }
}
