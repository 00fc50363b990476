use std::collections::HashMap;

use super::{RetrievalError, RetrievalPlan};
use crate::review::{Review, ReviewCorpus};

/// Prefix of the first line of every review block.
pub const REVIEW_BLOCK_MARKER: &str = "## Review ";

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Renders one review as a prompt block, including its trailing blank line.
///
/// ```text
/// ## Review 2024-06-12 | 9.0/10
/// Title: Lovely stay
/// + Great location
/// − Noisy street
///
/// ```
/// Absent fields produce no line.
pub fn render_block(review: &Review) -> String {
    let mut block = format!(
        "{REVIEW_BLOCK_MARKER}{} | {:.1}/10\n",
        review.published_at, review.score
    );
    if let Some(title) = &review.title {
        block.push_str(&format!("Title: {}\n", one_line(title)));
    }
    if let Some(pos) = &review.positive_text {
        block.push_str(&format!("+ {}\n", one_line(pos)));
    }
    if let Some(neg) = &review.negative_text {
        block.push_str(&format!("\u{2212} {}\n", one_line(neg)));
    }
    block.push('\n');
    block
}

/// Concatenates the blocks of the planned reviews in plan order.
pub fn build_context(plan: &RetrievalPlan, corpus: &ReviewCorpus) -> Result<String, RetrievalError> {
    let by_id: HashMap<&str, &Review> = corpus
        .reviews()
        .iter()
        .map(|r| (r.review_id.as_str(), r))
        .collect();
    let mut out = String::new();
    for item in &plan.selected {
        let review = by_id
            .get(item.review_id.as_str())
            .ok_or_else(|| RetrievalError::PlanCorpusMismatch(item.review_id.clone()))?;
        out.push_str(&render_block(review));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{select_reviews_for_budget, SelectionMode, TokenBudget, TokenizerConfig};
    use crate::review::synthetic::synthetic_corpus;
    use crate::retrieval::PlannedReview;

    #[test]
    fn positive_only_review_has_no_negative_line() {
        let corpus = synthetic_corpus(1, 120);
        let budget = TokenBudget::new(1000, 0, 0).unwrap();
        let plan = select_reviews_for_budget(&corpus, &budget, SelectionMode::Recency, None, &TokenizerConfig::default()).unwrap();
        let ctx = build_context(&plan, &corpus).unwrap();
        assert_eq!(ctx.matches(REVIEW_BLOCK_MARKER).count(), 1);
        assert!(ctx.lines().any(|l| l.starts_with("+ ")));
        assert!(!ctx.contains('\u{2212}'));
        assert!(!ctx.contains("Title:"));
    }

    #[test]
    fn output_is_deterministic() {
        let corpus = synthetic_corpus(20, 200);
        let budget = TokenBudget::new(800, 100, 0).unwrap();
        let plan = select_reviews_for_budget(&corpus, &budget, SelectionMode::Recency, None, &TokenizerConfig::default()).unwrap();
        assert_eq!(build_context(&plan, &corpus).unwrap(), build_context(&plan, &corpus).unwrap());
    }

    #[test]
    fn unknown_review_id_is_a_mismatch() {
        let corpus = synthetic_corpus(2, 120);
        let plan = RetrievalPlan {
            selected: vec![PlannedReview { review_id: "nope".into(), estimated_tokens: 1, relevance_score: None }],
            total_tokens: 1,
            dropped_count: 0,
            selection_mode: SelectionMode::Recency,
            available_tokens: 10,
        };
        assert_eq!(build_context(&plan, &corpus), Err(RetrievalError::PlanCorpusMismatch("nope".into())));
    }

    #[test]
    fn multiline_text_is_flattened() {
        let mut review = synthetic_corpus(1, 120).reviews()[0].clone();
        review.negative_text = Some("line one\n## Review fake\nline".into());
        let block = render_block(&review);
        assert_eq!(block.lines().filter(|l| l.starts_with(REVIEW_BLOCK_MARKER)).count(), 1);
        assert!(block.ends_with("\u{2212} line one ## Review fake line\n\n"));
    }
}
