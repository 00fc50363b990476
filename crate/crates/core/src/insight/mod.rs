//! Summaries and question answering over a review corpus.

mod engine;
mod template;

pub use engine::{
    detect_insufficient_evidence, is_valid_language, InsightEngine, InsightError, InsightKind, InsightResult,
    QueryRequest, SummaryRequest, Usage, DEFAULT_TEMPERATURE, INSUFFICIENT_EVIDENCE_NOTICE, MAX_COMPLETION_RESERVE,
};
pub use template::{
    render_prompt, PromptTemplate, TemplateError, TemplateRole, QUERY_TEMPLATE_V1, SUMMARY_TEMPLATE_V1,
};
