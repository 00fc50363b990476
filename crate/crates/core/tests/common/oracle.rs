//! Brute-force reference implementations used to check the optimized code.

use std::time::Duration;

use chrono::NaiveDate;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use review_insight::gateway::{Permit, RateLimitPolicy, RateLimiter};
use review_insight::review::{validate_listing_url, Review, ReviewCorpus, ReviewerInfo};

/// Lowercased maximal runs of alphanumeric characters, written out by hand.
fn oracle_terms(text: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else if !current.is_empty() {
            terms.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        terms.push(current);
    }
    terms
}

fn doc_text(r: &Review) -> String {
    let mut parts = Vec::new();
    for field in [&r.title, &r.positive_text, &r.negative_text].into_iter().flatten() {
        parts.push(field.as_str());
    }
    parts.join(" ")
}

/// Scores every review term by term, recounting document frequencies from
/// scratch for each query term occurrence.
pub fn bm25_oracle(reviews: &[Review], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = reviews.iter().map(|r| oracle_terms(&doc_text(r))).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut scored: Vec<(&Review, f64)> = reviews
        .iter()
        .zip(&docs)
        .map(|(review, doc)| {
            let mut score = 0.0;
            for q in oracle_terms(query) {
                let tf = doc.iter().filter(|t| **t == q).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = docs.iter().filter(|d| d.contains(&q)).count() as f64;
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                let norm = 1.0 - b + b * doc.len() as f64 / avgdl;
                score += idf * tf * (k1 + 1.0) / (tf + k1 * norm);
            }
            (review, score)
        })
        .collect();
    scored.sort_by(|(ra, sa), (rb, sb)| {
        sb.partial_cmp(sa)
            .unwrap()
            .then(rb.published_at.cmp(&ra.published_at))
            .then(ra.review_id.cmp(&rb.review_id))
    });
    scored.into_iter().map(|(r, s)| (r.review_id.clone(), s)).collect()
}

/// A random corpus of at most 50 reviews over a vocabulary of at most 200
/// words, plus a query drawn mostly from the same vocabulary.
pub fn random_corpus(seed: u64) -> (ReviewCorpus, String) {
    let mut rng = StdRng::seed_from_u64(seed);
    let vocab_size = rng.gen_range(1..=200);
    let alphabet: Vec<char> = "abcdefghijklmnopqrstuvwxyzéü".chars().collect();
    let vocab: Vec<String> = (0..vocab_size)
        .map(|i| {
            let len = rng.gen_range(1..=7);
            let word: String = (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect();
            if i % 17 == 0 {
                word.to_uppercase()
            } else {
                format!("{word}{}", i % 3)
            }
        })
        .collect();
    let separators = [" ", " ", " ", ", ", ". ", "! ", " - ", "\n"];
    let text = |rng: &mut StdRng, max_words: usize| -> Option<String> {
        let n = rng.gen_range(0..=max_words);
        (n > 0).then(|| {
            let mut s = String::new();
            for i in 0..n {
                if i > 0 {
                    s.push_str(separators[rng.gen_range(0..separators.len())]);
                }
                s.push_str(&vocab[rng.gen_range(0..vocab.len())]);
            }
            s
        })
    };
    let listing = validate_listing_url("https://www.booking.com/hotel/gr/oracle.html").unwrap();
    let n_reviews = rng.gen_range(1..=50);
    let mut reviews: Vec<Review> = Vec::with_capacity(n_reviews);
    for i in 0..n_reviews {
        if i > 0 && rng.gen_bool(0.08) {
            // identical text to an earlier review, to force score ties
            let mut twin = reviews[rng.gen_range(0..reviews.len())].clone();
            twin.review_id = format!("r{i:03}");
            reviews.push(twin);
            continue;
        }
        let mut title = text(&mut rng, 4);
        let positive_text = text(&mut rng, 30);
        let negative_text = text(&mut rng, 20);
        if title.is_none() && positive_text.is_none() && negative_text.is_none() {
            title = Some(vocab[0].clone());
        }
        reviews.push(Review {
            review_id: format!("r{i:03}"),
            listing_id: listing.listing_id.clone(),
            published_at: NaiveDate::from_ymd_opt(2024, 9, 1).unwrap() - chrono::Duration::days(rng.gen_range(0..5)),
            score: f64::from(rng.gen_range(0..=100)) / 10.0,
            title,
            positive_text,
            negative_text,
            manager_reply: None,
            reviewer: ReviewerInfo::default(),
            stay: None,
            likes: 0,
            photo_urls: Vec::new(),
            language_hint: None,
        });
    }
    let q_len = rng.gen_range(1..=6);
    let mut query: Vec<String> = (0..q_len).map(|_| vocab[rng.gen_range(0..vocab.len())].clone()).collect();
    if rng.gen_bool(0.3) {
        let dup = query[0].clone();
        query.push(dup);
    }
    if rng.gen_bool(0.2) {
        query.push("zzzzzzzzzz".into());
    }
    let corpus = ReviewCorpus::new(listing, reviews, Default::default(), "oracle").unwrap();
    (corpus, query.join(" ? "))
}

/// Window-scan admission check over the full grant history (newest last).
fn oracle_admits(policy: &RateLimitPolicy, grants: &[(Duration, u64)], at: Duration, tokens: u64) -> bool {
    let minute = Duration::from_secs(60);
    let day = Duration::from_secs(86_400);
    let (mut per_minute, mut per_day, mut minute_tokens) = (0u64, 0u64, 0u64);
    for &(g, t) in grants.iter().rev() {
        let age = at - g;
        if age >= day {
            break;
        }
        per_day += 1;
        if age < minute {
            per_minute += 1;
            minute_tokens += t;
        }
    }
    policy.requests_per_minute.is_none_or(|l| per_minute < u64::from(l))
        && policy.requests_per_day.is_none_or(|l| per_day < u64::from(l))
        && policy.tokens_per_minute.is_none_or(|l| minute_tokens + tokens <= l)
}

#[derive(Debug, Default)]
pub struct ScheduleOutcome {
    pub granted: usize,
    pub retried: usize,
    pub too_large: usize,
}

/// Drives `n` requests through the limiter and checks every decision and
/// the final history against the window-scan oracle.
pub fn check_rate_limiter(policy: RateLimitPolicy, n: usize, seed: u64) -> Result<ScheduleOutcome, String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut limiter = RateLimiter::new(policy);
    let mut grants: Vec<(Duration, u64)> = Vec::new();
    let mut outcome = ScheduleOutcome::default();
    let mut now = Duration::ZERO;
    let mut follow_up: Option<(Duration, u64)> = None;

    for i in 0..n {
        let (at, tokens) = match follow_up.take() {
            Some(retry) => retry,
            None => {
                let gap_ms = match rng.gen_range(0..100) {
                    0..=59 => rng.gen_range(0..3_000),
                    60..=89 => rng.gen_range(0..120_000),
                    90..=98 => rng.gen_range(0..7_200_000),
                    _ => rng.gen_range(0..86_400_000),
                };
                let tokens = if rng.gen_bool(0.9) {
                    rng.gen_range(1..150_000)
                } else {
                    rng.gen_range(150_000..1_100_000)
                };
                (now + Duration::from_millis(gap_ms), tokens)
            }
        };
        now = at;
        let admits = |t: Duration| oracle_admits(&policy, &grants, t, tokens);
        match limiter.acquire_at(tokens, now) {
            Permit::Granted => {
                if !admits(now) {
                    return Err(format!("request {i} granted at {now:?} but the oracle refuses it"));
                }
                grants.push((now, tokens));
                outcome.granted += 1;
            }
            Permit::RetryAfter { wait } => {
                if admits(now) {
                    return Err(format!("request {i} refused at {now:?} but the oracle admits it"));
                }
                if wait.is_zero() || !admits(now + wait) {
                    return Err(format!("request {i}: retry after {wait:?} is not enough"));
                }
                if admits(now + wait - Duration::from_nanos(1)) {
                    return Err(format!("request {i}: retry after {wait:?} is not the earliest moment"));
                }
                outcome.retried += 1;
                if rng.gen_bool(0.5) {
                    follow_up = Some((now + wait, tokens));
                }
            }
            Permit::TokenRequestTooLarge { requested, limit } => {
                if requested <= limit || policy.tokens_per_minute != Some(limit) {
                    return Err(format!("request {i}: bogus TokenRequestTooLarge"));
                }
                outcome.too_large += 1;
            }
        }
    }

    // Every window ending at a grant holds no more than the limits allow.
    for (i, &(end, _)) in grants.iter().enumerate() {
        let (mut minute_count, mut minute_tokens, mut day_count) = (0u64, 0u64, 0u64);
        for &(g, t) in grants[..=i].iter().rev() {
            let age = end - g;
            if age >= Duration::from_secs(86_400) {
                break;
            }
            day_count += 1;
            if age < Duration::from_secs(60) {
                minute_count += 1;
                minute_tokens += t;
            }
        }
        if policy.requests_per_minute.is_some_and(|l| minute_count > u64::from(l))
            || policy.tokens_per_minute.is_some_and(|l| minute_tokens > l)
            || policy.requests_per_day.is_some_and(|l| day_count > u64::from(l))
        {
            return Err(format!("window ending at grant {i} ({end:?}) exceeds the policy"));
        }
    }
    Ok(outcome)
}
