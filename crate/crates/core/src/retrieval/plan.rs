use serde::{Deserialize, Serialize};

use super::{estimate_tokens, render_block, Bm25Ranker, Ranker, RetrievalError, TokenizerConfig};
use crate::review::{Review, ReviewCorpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub prompt_window: u64,
    pub template_overhead: u64,
    pub completion_reserve: u64,
    /// `prompt_window − template_overhead`.
    pub available: u64,
}

impl TokenBudget {
    pub fn new(prompt_window: u64, template_overhead: u64, completion_reserve: u64) -> Result<Self, RetrievalError> {
        let available = prompt_window
            .checked_sub(template_overhead)
            .ok_or(RetrievalError::OverheadExceedsWindow {
                overhead: template_overhead,
                window: prompt_window,
            })?;
        Ok(Self {
            prompt_window,
            template_overhead,
            completion_reserve,
            available,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Recency,
    Relevance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedReview {
    pub review_id: String,
    /// Tokens of the review's rendered block, framing included.
    pub estimated_tokens: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalPlan {
    pub selected: Vec<PlannedReview>,
    pub total_tokens: u64,
    pub dropped_count: usize,
    pub selection_mode: SelectionMode,
    pub available_tokens: u64,
}

impl RetrievalPlan {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// Sum of the relevance scores of the selected reviews (0 in recency mode).
    pub fn relevance_mass(&self) -> f64 {
        self.selected.iter().filter_map(|p| p.relevance_score).sum()
    }

    /// Diagnostic log form: one line per selected review.
    pub fn log_lines(&self) -> String {
        self.selected
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let score = p
                    .relevance_score
                    .map(|s| format!(" score={s:.6}"))
                    .unwrap_or_default();
                format!("{i}\t{}\ttokens={}{score}\n", p.review_id, p.estimated_tokens)
            })
            .collect()
    }

    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(format!("{:?}\n", self.selection_mode));
        hasher.update(self.log_lines());
        crate::review::hex(&hasher.finalize()[..12])
    }
}

/// Greedy packing with the default BM25 ranker for relevance mode.
pub fn select_reviews_for_budget(
    corpus: &ReviewCorpus,
    budget: &TokenBudget,
    mode: SelectionMode,
    query: Option<&str>,
    tokenizer: &TokenizerConfig,
) -> Result<RetrievalPlan, RetrievalError> {
    select_with_ranker(corpus, budget, mode, query, tokenizer, &Bm25Ranker::default())
}

/// Packs reviews in mode order until the next one would overflow
/// `budget.available`. Recency mode walks the corpus default order;
/// relevance mode walks the ranker's order for `query`.
pub fn select_with_ranker(
    corpus: &ReviewCorpus,
    budget: &TokenBudget,
    mode: SelectionMode,
    query: Option<&str>,
    tokenizer: &TokenizerConfig,
    ranker: &dyn Ranker,
) -> Result<RetrievalPlan, RetrievalError> {
    let ordered: Vec<(&Review, Option<f64>)> = match mode {
        SelectionMode::Recency => corpus.in_default_order().into_iter().map(|r| (r, None)).collect(),
        SelectionMode::Relevance => {
            let query = query.ok_or(RetrievalError::EmptyQuery)?;
            ranker
                .rank(corpus, query)?
                .into_iter()
                .map(|ranked| {
                    let review = corpus
                        .get(&ranked.review_id)
                        .ok_or_else(|| RetrievalError::PlanCorpusMismatch(ranked.review_id.clone()))?;
                    Ok((review, Some(ranked.score)))
                })
                .collect::<Result<_, RetrievalError>>()?
        }
    };

    let mut selected = Vec::new();
    let mut total = 0u64;
    for (review, score) in &ordered {
        let tokens = estimate_tokens(&render_block(review), tokenizer);
        if total + tokens > budget.available {
            break;
        }
        total += tokens;
        selected.push(PlannedReview {
            review_id: review.review_id.clone(),
            estimated_tokens: tokens,
            relevance_score: *score,
        });
    }

    if selected.is_empty() {
        if let Some((first, _)) = ordered.first() {
            return Err(RetrievalError::BudgetTooSmall {
                available: budget.available,
                needed: estimate_tokens(&render_block(first), tokenizer),
            });
        }
    }

    Ok(RetrievalPlan {
        dropped_count: ordered.len() - selected.len(),
        selected,
        total_tokens: total,
        selection_mode: mode,
        available_tokens: budget.available,
    })
}
