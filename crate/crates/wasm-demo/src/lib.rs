//! Browser demo: context packing, BM25 ranking over a bundled listing, and
//! the sliding-window rate limiter. Every export returns a JSON string.

use std::time::Duration;

use review_insight::gateway::{ModelRegistry, Permit, RateLimitPolicy, RateLimiter};
use review_insight::insight::detect_insufficient_evidence;
use review_insight::retrieval::{
    render_block, select_reviews_for_budget, RetrievalError, SelectionMode, TokenBudget, TokenizerConfig,
};
use review_insight::review::{read_corpus, synthetic::synthetic_corpus, ReviewCorpus};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

const BUNDLED_CORPUS: &str = include_str!("../../../fixtures/238eae49005694f0/reviews.corpus");
const SNIPPET_CHARS: usize = 160;

fn to_json(value: &impl Serialize) -> String {
    serde_json::to_string(value).expect("demo values serialize")
}

fn error_json(kind: &str, message: impl ToString) -> String {
    to_json(&json!({ "error": kind, "message": message.to_string() }))
}

fn bundled() -> ReviewCorpus {
    read_corpus(BUNDLED_CORPUS).expect("bundled corpus parses").1
}

/// Registry rows for the model picker.
#[wasm_bindgen]
pub fn models() -> String {
    let rows: Vec<_> = ModelRegistry::seeded()
        .list()
        .iter()
        .map(|m| {
            json!({
                "model_id": m.model_id,
                "display_name": m.display_name,
                "prompt_window": m.prompt_window,
                "completion_window": m.completion_window,
            })
        })
        .collect();
    to_json(&rows)
}

/// Packs `count` synthetic reviews of `block_chars` characters each into a
/// model's prompt window.
#[wasm_bindgen]
pub fn pack(model_id: &str, count: usize, block_chars: usize, template_overhead: u64) -> String {
    let registry = ModelRegistry::seeded();
    let profile = match registry.lookup(model_id) {
        Ok(p) => p,
        Err(e) => return error_json(e.kind(), e),
    };
    if count == 0 || count > 5000 || !(40..=20_000).contains(&block_chars) {
        return error_json("InvalidInput", "count must be 1..=5000 and block size 40..=20000 characters");
    }
    let corpus = synthetic_corpus(count, block_chars);
    let tokenizer = TokenizerConfig::default();
    let plan = TokenBudget::new(profile.prompt_window, template_overhead, 0).and_then(|budget| {
        select_reviews_for_budget(&corpus, &budget, SelectionMode::Recency, None, &tokenizer)
    });
    match plan {
        Ok(plan) => to_json(&json!({
            "model_id": profile.model_id,
            "prompt_window": profile.prompt_window,
            "available_tokens": plan.available_tokens,
            "tokens_per_review": plan.selected.first().map(|r| r.estimated_tokens),
            "selected": plan.len(),
            "dropped": plan.dropped_count,
            "total_tokens": plan.total_tokens,
        })),
        Err(e @ RetrievalError::BudgetTooSmall { .. }) => error_json("BudgetTooSmall", e),
        Err(e) => error_json("InvalidInput", e),
    }
}

/// Ranks the bundled listing's reviews for `question` and packs the best
/// ones into `prompt_window` tokens.
#[wasm_bindgen]
pub fn rank(question: &str, prompt_window: u64, limit: usize) -> String {
    let corpus = bundled();
    let budget = match TokenBudget::new(prompt_window, 0, 0) {
        Ok(b) => b,
        Err(e) => return error_json("InvalidInput", e),
    };
    let plan = match select_reviews_for_budget(
        &corpus,
        &budget,
        SelectionMode::Relevance,
        Some(question),
        &TokenizerConfig::default(),
    ) {
        Ok(plan) => plan,
        Err(RetrievalError::EmptyQuery) => return error_json("EmptyQuestion", "the question has no searchable words"),
        Err(e) => return error_json("RetrievalError", e),
    };
    let hits: Vec<_> = plan
        .selected
        .iter()
        .take(limit)
        .filter_map(|p| {
            let review = corpus.get(&p.review_id)?;
            let block = render_block(review);
            Some(json!({
                "review_id": p.review_id,
                "score": p.relevance_score,
                "date": review.published_at,
                "tokens": p.estimated_tokens,
                "snippet": block.chars().take(SNIPPET_CHARS).collect::<String>(),
            }))
        })
        .collect();
    to_json(&json!({
        "listing": corpus.listing.name,
        "corpus_reviews": corpus.len(),
        "selected": plan.len(),
        "total_tokens": plan.total_tokens,
        "insufficient_evidence": detect_insufficient_evidence(&plan, question),
        "hits": hits,
    }))
}

/// Sends `count` requests of `tokens` each, `spacing_ms` apart, through the
/// Gemini free-tier limiter (or a custom requests-per-minute limit when
/// `rpm` is non-zero). Denied requests are not retried.
#[wasm_bindgen]
pub fn simulate_rate_limit(count: u32, spacing_ms: u32, tokens: u64, rpm: u32) -> String {
    let mut policy = RateLimitPolicy::GEMINI_FREE_TIER;
    if rpm > 0 {
        policy.requests_per_minute = Some(rpm);
    }
    let mut limiter = RateLimiter::new(policy);
    let mut events = Vec::new();
    let (mut granted, mut denied) = (0u32, 0u32);
    for i in 0..count.min(10_000) {
        let at = Duration::from_millis(u64::from(i) * u64::from(spacing_ms));
        let permit = limiter.acquire_at(tokens, at);
        match permit {
            Permit::Granted => granted += 1,
            _ => denied += 1,
        }
        events.push(json!({ "at_s": at.as_secs_f64(), "permit": permit }));
    }
    to_json(&json!({ "policy": policy, "granted": granted, "denied": denied, "events": events }))
}
