use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::template::{render_prompt, PromptTemplate, TemplateError};
use crate::gateway::{CompletionRequest, Gateway, GatewayError};
use crate::money::Usd;
use crate::retrieval::{
    build_context, select_with_ranker, tokenize, Bm25Ranker, Ranker, RetrievalError, RetrievalPlan, SelectionMode,
    TokenBudget,
};
use crate::review::{ListingId, ReviewCorpus};

pub const DEFAULT_TEMPERATURE: f64 = 0.2;
/// Completion reserve is the model's completion window capped at this.
pub const MAX_COMPLETION_RESERVE: u64 = 1024;

/// Prepended to answers whose retrieved reviews do not mention the question.
pub const INSUFFICIENT_EVIDENCE_NOTICE: &str =
    "Not enough information: none of the reviews of this listing mention what you asked about.";

#[derive(Debug, thiserror::Error)]
pub enum InsightError {
    #[error("corpus has no reviews")]
    EmptyCorpus,
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid language code {0:?}")]
    InvalidLanguage(String),
    #[error("request is for listing {requested} but the corpus belongs to {corpus}")]
    ListingMismatch { requested: ListingId, corpus: ListingId },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("{model_id}: {source}")]
    Gateway {
        model_id: String,
        #[source]
        source: GatewayError,
    },
}

impl InsightError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::EmptyCorpus => "EmptyCorpus",
            Self::EmptyQuestion => "EmptyQuestion",
            Self::InvalidLanguage(_) => "InvalidLanguage",
            Self::ListingMismatch { .. } => "ListingMismatch",
            Self::Template(_) => "TemplateError",
            Self::Retrieval(RetrievalError::BudgetTooSmall { .. }) => "BudgetTooSmall",
            Self::Retrieval(RetrievalError::EmptyQuery) => "EmptyQuestion",
            Self::Retrieval(_) => "RetrievalError",
            Self::Gateway { source, .. } => source.kind(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRequest {
    pub listing_id: ListingId,
    pub language: String,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRequest {
    pub listing_id: ListingId,
    pub question: String,
    pub language: String,
    pub model_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsightKind {
    Summary,
    Answer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightResult {
    pub kind: InsightKind,
    pub text: String,
    pub model_id: String,
    pub language: String,
    pub template_id: String,
    pub template_version: u32,
    pub plan_digest: String,
    pub reviews_used: usize,
    pub reviews_dropped: usize,
    pub usage: Usage,
    pub cost: Usd,
    #[serde(rename = "latency_s", with = "crate::gateway::duration_secs")]
    pub latency: Duration,
    pub insufficient_evidence: bool,
}

/// Language codes are passed to the model verbatim; only their shape is
/// checked (`en`, `el`, `pt-BR`, `zh-Hant`).
pub fn is_valid_language(code: &str) -> bool {
    let mut parts = code.split('-');
    let primary = parts.next().unwrap_or_default();
    (2..=3).contains(&primary.len())
        && primary.bytes().all(|b| b.is_ascii_lowercase())
        && parts.all(|p| (2..=8).contains(&p.len()) && p.bytes().all(|b| b.is_ascii_alphanumeric()))
}

/// True when the question shares no term with any selected review: the
/// relevance scores of the plan sum to zero.
pub fn detect_insufficient_evidence(plan: &RetrievalPlan, question: &str) -> bool {
    tokenize(question).is_empty() || plan.relevance_mass() <= 0.0
}

type SummaryKey = (ListingId, String, String, String);

pub struct InsightEngine {
    gateway: Arc<Gateway>,
    summary_template: PromptTemplate,
    query_template: PromptTemplate,
    ranker: Arc<dyn Ranker>,
    summary_ttl: Duration,
    summaries: RwLock<HashMap<SummaryKey, (Duration, InsightResult)>>,
}

impl InsightEngine {
    pub fn new(gateway: Arc<Gateway>) -> Self {
        Self {
            gateway,
            summary_template: PromptTemplate::summary_v1(),
            query_template: PromptTemplate::query_v1(),
            ranker: Arc::new(Bm25Ranker::default()),
            summary_ttl: Duration::from_secs(24 * 60 * 60),
            summaries: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_templates(mut self, summary: PromptTemplate, query: PromptTemplate) -> Self {
        self.summary_template = summary;
        self.query_template = query;
        self
    }

    pub fn with_ranker(mut self, ranker: Arc<dyn Ranker>) -> Self {
        self.ranker = ranker;
        self
    }

    pub fn with_summary_ttl(mut self, ttl: Duration) -> Self {
        self.summary_ttl = ttl;
        self
    }

    pub fn gateway(&self) -> &Arc<Gateway> {
        &self.gateway
    }

    fn check_common(&self, corpus: &ReviewCorpus, listing_id: &ListingId, language: &str) -> Result<(), InsightError> {
        if corpus.is_empty() {
            return Err(InsightError::EmptyCorpus);
        }
        if corpus.listing.listing_id != *listing_id {
            return Err(InsightError::ListingMismatch {
                requested: listing_id.clone(),
                corpus: corpus.listing.listing_id.clone(),
            });
        }
        if !is_valid_language(language) {
            return Err(InsightError::InvalidLanguage(language.to_owned()));
        }
        Ok(())
    }

    /// Budget for `template` rendered with an empty context.
    fn budget(
        &self,
        model_id: &str,
        template: &PromptTemplate,
        bindings: &[(&str, &str)],
    ) -> Result<TokenBudget, InsightError> {
        let profile = self
            .gateway
            .lookup_model(model_id)
            .map_err(|source| InsightError::Gateway {
                model_id: model_id.to_owned(),
                source,
            })?;
        let (system, user) = render_prompt(template, bindings)?;
        let overhead = self.gateway.prompt_tokens(&system, &user);
        Ok(TokenBudget::new(
            profile.prompt_window,
            overhead,
            profile.completion_window.min(MAX_COMPLETION_RESERVE),
        )?)
    }

    fn dispatch(
        &self,
        model_id: &str,
        system_text: String,
        user_text: String,
        budget: &TokenBudget,
    ) -> Result<crate::gateway::CompletionResponse, InsightError> {
        let request = CompletionRequest {
            model_id: model_id.to_owned(),
            system_text,
            user_text,
            max_output_tokens: budget.completion_reserve,
            temperature: DEFAULT_TEMPERATURE,
        };
        debug_assert!(
            self.gateway.prompt_tokens(&request.system_text, &request.user_text) <= budget.prompt_window,
            "packed prompt exceeds the model window"
        );
        self.gateway.complete(&request).map_err(|source| InsightError::Gateway {
            model_id: model_id.to_owned(),
            source,
        })
    }

    /// Three-part summary (positives, negatives, conclusion) of the newest
    /// reviews that fit the model's window. Cached per listing, model,
    /// language and corpus content.
    pub fn summarize(&self, corpus: &ReviewCorpus, request: &SummaryRequest) -> Result<InsightResult, InsightError> {
        self.check_common(corpus, &request.listing_id, &request.language)?;
        let key: SummaryKey = (
            request.listing_id.clone(),
            request.model_id.clone(),
            request.language.clone(),
            corpus.digest(),
        );
        let now = self.gateway.clock().monotonic();
        if let Some((stored_at, hit)) = self.summaries.read().expect("cache lock poisoned").get(&key) {
            if now.saturating_sub(*stored_at) < self.summary_ttl {
                return Ok(hit.clone());
            }
        }
        let result = self.summarize_uncached(corpus, request)?;
        let stored_at = self.gateway.clock().monotonic();
        self.summaries
            .write()
            .expect("cache lock poisoned")
            .insert(key, (stored_at, result.clone()));
        Ok(result)
    }

    /// Like [`summarize`](Self::summarize) but always calls the model and
    /// leaves the cache untouched.
    pub fn summarize_uncached(
        &self,
        corpus: &ReviewCorpus,
        request: &SummaryRequest,
    ) -> Result<InsightResult, InsightError> {
        self.check_common(corpus, &request.listing_id, &request.language)?;
        let template = &self.summary_template;
        let budget = self.budget(&request.model_id, template, &[("language", &request.language), ("context", "")])?;
        let plan = select_with_ranker(
            corpus,
            &budget,
            SelectionMode::Recency,
            None,
            self.gateway.tokenizer(),
            self.ranker.as_ref(),
        )?;
        let context = build_context(&plan, corpus)?;
        let (system, user) = render_prompt(template, &[("language", &request.language), ("context", &context)])?;
        let response = self.dispatch(&request.model_id, system, user, &budget)?;

        let result = InsightResult {
            kind: InsightKind::Summary,
            text: response.text,
            model_id: request.model_id.clone(),
            language: request.language.clone(),
            template_id: template.template_id.clone(),
            template_version: template.version,
            plan_digest: plan.digest(),
            reviews_used: plan.len(),
            reviews_dropped: plan.dropped_count,
            usage: Usage {
                input_tokens: response.input_tokens,
                output_tokens: response.output_tokens,
            },
            cost: response.cost,
            latency: response.latency,
            insufficient_evidence: false,
        };
        Ok(result)
    }

    /// Answers a question from the reviews most relevant to it. Never cached.
    pub fn answer_query(&self, corpus: &ReviewCorpus, request: &QueryRequest) -> Result<InsightResult, InsightError> {
        let question = request.question.trim();
        if question.is_empty() {
            return Err(InsightError::EmptyQuestion);
        }
        self.check_common(corpus, &request.listing_id, &request.language)?;
        if tokenize(question).is_empty() {
            return Err(InsightError::EmptyQuestion);
        }

        let template = &self.query_template;
        let budget = self.budget(
            &request.model_id,
            template,
            &[("language", &request.language), ("context", ""), ("question", question)],
        )?;
        let plan = select_with_ranker(
            corpus,
            &budget,
            SelectionMode::Relevance,
            Some(question),
            self.gateway.tokenizer(),
            self.ranker.as_ref(),
        )?;
        let insufficient = detect_insufficient_evidence(&plan, question);
        let context = build_context(&plan, corpus)?;
        let (system, user) = render_prompt(
            template,
            &[("language", &request.language), ("context", &context), ("question", question)],
        )?;
        let response = self.dispatch(&request.model_id, system, user, &budget)?;

        let text = if insufficient && !response.text.contains(INSUFFICIENT_EVIDENCE_NOTICE) {
            format!("{INSUFFICIENT_EVIDENCE_NOTICE}\n\n{}", response.text)
        } else {
            response.text
        };
        Ok(InsightResult {
            kind: InsightKind::Answer,
            text,
            model_id: request.model_id.clone(),
            language: request.language.clone(),
            template_id: template.template_id.clone(),
            template_version: template.version,
            plan_digest: plan.digest(),
            reviews_used: plan.len(),
            reviews_dropped: plan.dropped_count,
            usage: Usage {
                input_tokens: response.input_tokens,
                output_tokens: response.output_tokens,
            },
            cost: response.cost,
            latency: response.latency,
            insufficient_evidence: insufficient,
        })
    }
}
