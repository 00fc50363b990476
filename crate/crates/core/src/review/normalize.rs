//! Mapping between provider record schemas and [`Review`].
//!
//! Two reseller schemas are supported. The Arel-shaped record is flat and
//! carries the review text plus the manager's reply. The Caprolok-shaped
//! record nests reviewer, booking and review sections and adds stay dates,
//! likes and photos.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{normalize_country, ListingId, Review, ReviewError, ReviewerInfo, ReviewerType, StayInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderSchema {
    Arel,
    Caprolok,
}

impl ProviderSchema {
    pub fn name(self) -> &'static str {
        match self {
            Self::Arel => "arel",
            Self::Caprolok => "caprolok",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NormalizeContext {
    pub listing_id: ListingId,
    /// Ingestion date; reviews dated after it are rejected.
    pub today: NaiveDate,
    /// Top of the provider's score scale. Scores are rescaled linearly to 0..=10.
    pub score_scale: f64,
}

impl NormalizeContext {
    pub fn new(listing_id: ListingId, today: NaiveDate) -> Self {
        Self {
            listing_id,
            today,
            score_scale: 10.0,
        }
    }
}

pub fn normalize_review(
    raw: &Value,
    schema: ProviderSchema,
    ctx: &NormalizeContext,
) -> Result<Review, ReviewError> {
    let record = raw.as_object().ok_or_else(|| mismatch(schema, "<record>"))?;
    let review = match schema {
        ProviderSchema::Arel => from_arel(record, ctx)?,
        ProviderSchema::Caprolok => from_caprolok(record, ctx)?,
    };
    review.validate(ctx.today)?;
    Ok(review)
}

/// Renders a review back into a provider's record shape. Fields the schema
/// cannot carry are dropped; scores are written on the context's scale.
pub fn denormalize_review(review: &Review, schema: ProviderSchema, ctx: &NormalizeContext) -> Value {
    let score = review.score * ctx.score_scale / 10.0;
    match schema {
        ProviderSchema::Arel => {
            let mut obj = Map::new();
            obj.insert("id".into(), json!(review.review_id));
            obj.insert("reviewDate".into(), json!(review.published_at.to_string()));
            obj.insert("rating".into(), json!(score));
            put_opt(&mut obj, "reviewTitle", &review.title);
            put_opt(&mut obj, "likedText", &review.positive_text);
            put_opt(&mut obj, "dislikedText", &review.negative_text);
            put_opt(&mut obj, "propertyResponse", &review.manager_reply);
            Value::Object(obj)
        }
        ProviderSchema::Caprolok => {
            let mut reviewer = Map::new();
            put_opt(&mut reviewer, "username", &review.reviewer.username);
            put_opt(&mut reviewer, "country", &review.reviewer.country);
            if let Some(t) = review.reviewer.reviewer_type {
                reviewer.insert("type".into(), json!(t.label()));
            }
            let mut body = Map::new();
            body.insert("publishedDate".into(), json!(review.published_at.to_string()));
            body.insert("score".into(), json!(score));
            put_opt(&mut body, "title", &review.title);
            put_opt(&mut body, "positive", &review.positive_text);
            put_opt(&mut body, "negative", &review.negative_text);
            put_opt(&mut body, "hotelReply", &review.manager_reply);
            body.insert("likes".into(), json!(review.likes));
            body.insert("photos".into(), json!(review.photo_urls));
            put_opt(&mut body, "language", &review.language_hint);

            let mut obj = Map::new();
            obj.insert("reviewId".into(), json!(review.review_id));
            obj.insert("reviewer".into(), Value::Object(reviewer));
            if let Some(stay) = review.stay {
                obj.insert(
                    "booking".into(),
                    json!({
                        "nights": stay.nights,
                        "checkIn": stay.check_in.to_string(),
                        "checkOut": stay.check_out.to_string(),
                    }),
                );
            }
            obj.insert("review".into(), Value::Object(body));
            Value::Object(obj)
        }
    }
}

fn put_opt(obj: &mut Map<String, Value>, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        obj.insert(key.into(), json!(v));
    }
}

fn mismatch(schema: ProviderSchema, field: &str) -> ReviewError {
    ReviewError::SchemaMismatch {
        schema: schema.name(),
        field: field.to_owned(),
    }
}

fn from_arel(record: &Map<String, Value>, ctx: &NormalizeContext) -> Result<Review, ReviewError> {
    let schema = ProviderSchema::Arel;
    let review_id = required_id(record, "id", schema)?;
    let published_at = required_date(record, "reviewDate", schema)?;
    let score = rescale(required_number(record, "rating", schema)?, ctx.score_scale)?;
    Ok(Review {
        review_id,
        listing_id: ctx.listing_id.clone(),
        published_at,
        score,
        title: text(record, "reviewTitle"),
        positive_text: text(record, "likedText"),
        negative_text: text(record, "dislikedText"),
        manager_reply: text(record, "propertyResponse"),
        reviewer: ReviewerInfo::default(),
        stay: None,
        likes: 0,
        photo_urls: Vec::new(),
        language_hint: None,
    })
}

fn from_caprolok(record: &Map<String, Value>, ctx: &NormalizeContext) -> Result<Review, ReviewError> {
    let schema = ProviderSchema::Caprolok;
    let review_id = required_id(record, "reviewId", schema)?;
    let body = record
        .get("review")
        .and_then(Value::as_object)
        .ok_or_else(|| mismatch(schema, "review"))?;
    let published_at = required_date(body, "publishedDate", schema)
        .map_err(|_| mismatch(schema, "review.publishedDate"))?;
    let score = rescale(
        required_number(body, "score", schema).map_err(|_| mismatch(schema, "review.score"))?,
        ctx.score_scale,
    )?;

    let empty = Map::new();
    let reviewer_obj = record.get("reviewer").and_then(Value::as_object).unwrap_or(&empty);
    let reviewer = ReviewerInfo {
        username: text(reviewer_obj, "username"),
        country: text(reviewer_obj, "country")
            .map(|c| normalize_country(&c))
            .transpose()?,
        reviewer_type: text(reviewer_obj, "type").map(|t| ReviewerType::from_label(&t)),
    };

    let stay = match record.get("booking").and_then(Value::as_object) {
        Some(booking) => stay_from(booking, schema)?,
        None => None,
    };

    let likes = match body.get("likes") {
        None | Some(Value::Null) => 0,
        Some(v) => v
            .as_u64()
            .and_then(|n| u32::try_from(n).ok())
            .ok_or_else(|| mismatch(schema, "review.likes"))?,
    };
    let photo_urls = match body.get("photos") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| v.as_str().map(str::trim).map(str::to_owned))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| mismatch(schema, "review.photos"))?
            .into_iter()
            .filter(|s| !s.is_empty())
            .collect(),
        Some(_) => return Err(mismatch(schema, "review.photos")),
    };

    Ok(Review {
        review_id,
        listing_id: ctx.listing_id.clone(),
        published_at,
        score,
        title: text(body, "title"),
        positive_text: text(body, "positive"),
        negative_text: text(body, "negative"),
        manager_reply: text(body, "hotelReply"),
        reviewer,
        stay,
        likes,
        photo_urls,
        language_hint: text(body, "language"),
    })
}

fn stay_from(booking: &Map<String, Value>, schema: ProviderSchema) -> Result<Option<StayInfo>, ReviewError> {
    let check_in = optional_date(booking, "checkIn").map_err(|_| mismatch(schema, "booking.checkIn"))?;
    let check_out = optional_date(booking, "checkOut").map_err(|_| mismatch(schema, "booking.checkOut"))?;
    let nights = match booking.get("nights") {
        None | Some(Value::Null) => None,
        Some(v) => Some(
            v.as_u64()
                .and_then(|n| u32::try_from(n).ok())
                .ok_or_else(|| mismatch(schema, "booking.nights"))?,
        ),
    };
    match (check_in, check_out) {
        (Some(check_in), Some(check_out)) => {
            let nights = match nights {
                Some(n) => n,
                None => u32::try_from((check_out - check_in).num_days()).unwrap_or(0),
            };
            StayInfo::new(nights, check_in, check_out).map(Some)
        }
        (None, None) => Ok(None),
        _ => Err(ReviewError::InvalidStay(
            "booking has only one of check-in/check-out".into(),
        )),
    }
}

fn rescale(raw: f64, scale: f64) -> Result<f64, ReviewError> {
    if !raw.is_finite() || raw < 0.0 || raw > scale {
        return Err(ReviewError::ScoreOutOfRange(raw));
    }
    if scale == 10.0 {
        Ok(raw)
    } else {
        Ok(raw * 10.0 / scale)
    }
}

/// Trimmed string field; missing, null and blank all map to `None`.
fn text(record: &Map<String, Value>, key: &str) -> Option<String> {
    record
        .get(key)
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
}

fn required_id(record: &Map<String, Value>, key: &str, schema: ProviderSchema) -> Result<String, ReviewError> {
    match record.get(key) {
        Some(Value::String(s)) if !s.trim().is_empty() => Ok(s.trim().to_owned()),
        Some(Value::Number(n)) => Ok(n.to_string()),
        _ => Err(mismatch(schema, key)),
    }
}

fn required_number(record: &Map<String, Value>, key: &str, schema: ProviderSchema) -> Result<f64, ReviewError> {
    match record.get(key) {
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| mismatch(schema, key)),
        Some(Value::String(s)) => s.trim().replace(',', ".").parse().map_err(|_| mismatch(schema, key)),
        _ => Err(mismatch(schema, key)),
    }
}

fn required_date(record: &Map<String, Value>, key: &str, schema: ProviderSchema) -> Result<NaiveDate, ReviewError> {
    optional_date(record, key)
        .map_err(|_| mismatch(schema, key))?
        .ok_or_else(|| mismatch(schema, key))
}

/// Accepts `YYYY-MM-DD` or an RFC 3339 timestamp (date part is kept).
fn optional_date(record: &Map<String, Value>, key: &str) -> Result<Option<NaiveDate>, ()> {
    match record.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => {
            let s = s.trim();
            let date_part = s.get(..10).ok_or(())?;
            NaiveDate::parse_from_str(date_part, "%Y-%m-%d").map(Some).map_err(|_| ())
        }
        Some(_) => Err(()),
    }
}
