//! Decides which reviews enter a prompt: token estimation, budget packing
//! and lexical relevance ranking.

mod bm25;
mod context;
mod plan;
mod tokens;

pub use bm25::{rank_reviews_bm25, tokenize, Bm25Index, Bm25Params, Bm25Ranker, RankedReview, Ranker};
pub use context::{build_context, render_block, REVIEW_BLOCK_MARKER};
pub use plan::{
    select_reviews_for_budget, select_with_ranker, PlannedReview, RetrievalPlan, SelectionMode, TokenBudget,
};
pub use tokens::{estimate_tokens, TokenizerConfig};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RetrievalError {
    #[error("budget of {available} tokens cannot hold the first review ({needed} tokens)")]
    BudgetTooSmall { available: u64, needed: u64 },
    #[error("template overhead of {overhead} tokens exceeds the prompt window of {window}")]
    OverheadExceedsWindow { overhead: u64, window: u64 },
    #[error("query has no searchable terms")]
    EmptyQuery,
    #[error("plan references review {0}, which is not in the corpus")]
    PlanCorpusMismatch(String),
    #[error("invalid tokenizer configuration: {0}")]
    InvalidTokenizer(String),
}
