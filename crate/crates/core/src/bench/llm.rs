use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::clock::Clock;
use crate::gateway::{Gateway, MockBackend, ModelRegistry};
use crate::insight::{InsightEngine, InsightResult, QueryRequest, SummaryRequest};
use crate::money::Usd;
use crate::review::ReviewCorpus;

pub const DEFAULT_BENCH_QUESTION: &str = "Is the wifi fast enough to work remotely?";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchRole {
    Summary,
    Query,
}

impl BenchRole {
    pub fn label(self) -> &'static str {
        match self {
            Self::Summary => "summary",
            Self::Query => "query",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockKind {
    Real,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub model_ids: Vec<String>,
    pub trials: usize,
    pub roles: Vec<BenchRole>,
    pub question: String,
    pub language: String,
}

impl BenchPlan {
    /// The six models timed in the evaluation, three trials per cell.
    pub fn table3() -> Self {
        Self::for_models(
            ["gemini-1.5-flash", "gpt-4o-mini", "gpt-4o", "o1-mini", "claude-3.5-sonnet", "gpt-4"]
                .map(String::from)
                .to_vec(),
        )
    }

    pub fn for_models(model_ids: Vec<String>) -> Self {
        Self {
            model_ids,
            trials: 3,
            roles: vec![BenchRole::Summary, BenchRole::Query],
            question: DEFAULT_BENCH_QUESTION.into(),
            language: "en".into(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        if self.trials == 0 {
            return Err(BenchError::InvalidPlan("trials must be at least 1".into()));
        }
        if self.model_ids.is_empty() || self.roles.is_empty() {
            return Err(BenchError::EmptyInput);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model_id: String,
    pub display_name: String,
    pub role: BenchRole,
    /// Successful samples; equals the plan's trials unless `error` is set.
    pub samples: usize,
    #[serde(default, with = "opt_secs", skip_serializing_if = "Option::is_none")]
    pub mean_latency: Option<Duration>,
    #[serde(default, with = "opt_secs", skip_serializing_if = "Option::is_none")]
    pub min_latency: Option<Duration>,
    #[serde(default, with = "opt_secs", skip_serializing_if = "Option::is_none")]
    pub max_latency: Option<Duration>,
    pub reviews_used: usize,
    pub input_tokens: u64,
    pub output_tokens: u64,
    /// Sum of the per-call gateway costs.
    pub total_cost: Usd,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl BenchRow {
    pub fn cost_per_call(&self) -> Option<Usd> {
        (self.samples > 0).then(|| self.total_cost.scale(1, self.samples as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub clock: ClockKind,
    pub trials: usize,
    pub corpus_reviews: usize,
    pub question: String,
    pub rows: Vec<BenchRow>,
}

mod opt_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_f64(d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        Option::<f64>::deserialize(d)?
            .map(|s| Duration::try_from_secs_f64(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

fn run_cell(
    engine: &InsightEngine,
    corpus: &ReviewCorpus,
    plan: &BenchPlan,
    model_id: &str,
    role: BenchRole,
) -> BenchRow {
    let display_name = engine
        .gateway()
        .lookup_model(model_id)
        .map(|p| p.display_name.clone())
        .unwrap_or_else(|_| model_id.to_owned());
    let mut row = BenchRow {
        model_id: model_id.to_owned(),
        display_name,
        role,
        samples: 0,
        mean_latency: None,
        min_latency: None,
        max_latency: None,
        reviews_used: 0,
        input_tokens: 0,
        output_tokens: 0,
        total_cost: Usd::ZERO,
        error: None,
    };
    let listing_id = corpus.listing.listing_id.clone();
    let mut latencies = Vec::with_capacity(plan.trials);
    for _ in 0..plan.trials {
        let outcome: Result<InsightResult, _> = match role {
            BenchRole::Summary => engine.summarize_uncached(
                corpus,
                &SummaryRequest {
                    listing_id: listing_id.clone(),
                    language: plan.language.clone(),
                    model_id: model_id.to_owned(),
                },
            ),
            BenchRole::Query => engine.answer_query(
                corpus,
                &QueryRequest {
                    listing_id: listing_id.clone(),
                    question: plan.question.clone(),
                    language: plan.language.clone(),
                    model_id: model_id.to_owned(),
                },
            ),
        };
        match outcome {
            Ok(result) => {
                latencies.push(result.latency);
                row.reviews_used = result.reviews_used;
                row.input_tokens += result.usage.input_tokens;
                row.output_tokens += result.usage.output_tokens;
                row.total_cost += result.cost;
            }
            Err(e) => {
                row.error = Some(e.kind().to_owned());
                break;
            }
        }
    }
    row.samples = latencies.len();
    if row.error.is_none() && !latencies.is_empty() {
        row.mean_latency = Some(latencies.iter().sum::<Duration>() / latencies.len() as u32);
        row.min_latency = latencies.iter().min().copied();
        row.max_latency = latencies.iter().max().copied();
    }
    row
}

/// Times every (model, role) cell sequentially. Rows are grouped per model;
/// models are ordered by mean summary latency (query latency when the plan
/// has no summary role), ties by model id, models with a failed cell last.
pub fn run_llm_bench(plan: &BenchPlan, engine: &InsightEngine, corpus: &ReviewCorpus) -> Result<BenchReport, BenchError> {
    plan.validate()?;
    let mut roles = plan.roles.clone();
    roles.sort();
    roles.dedup();

    let mut per_model: Vec<Vec<BenchRow>> = plan
        .model_ids
        .iter()
        .map(|model_id| {
            roles
                .iter()
                .map(|&role| run_cell(engine, corpus, plan, model_id, role))
                .collect()
        })
        .collect();
    per_model.sort_by(|a, b| {
        let key = |rows: &Vec<BenchRow>| {
            let failed = rows.iter().any(|r| r.error.is_some());
            (failed, rows[0].mean_latency.unwrap_or(Duration::MAX))
        };
        key(a).cmp(&key(b)).then_with(|| a[0].model_id.cmp(&b[0].model_id))
    });

    Ok(BenchReport {
        clock: if engine.gateway().clock().is_simulated() {
            ClockKind::Simulated
        } else {
            ClockKind::Real
        },
        trials: plan.trials,
        corpus_reviews: corpus.len(),
        question: plan.question.clone(),
        rows: per_model.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockDelay {
    pub model_id: String,
    pub summary: Duration,
    pub query: Duration,
}

/// Observed per-prompt latencies from the evaluation; ranges use their
/// midpoint.
pub fn table3_mock_delays() -> Vec<MockDelay> {
    let d = |model_id: &str, summary: f64, query: f64| MockDelay {
        model_id: model_id.into(),
        summary: Duration::from_secs_f64(summary),
        query: Duration::from_secs_f64(query),
    };
    vec![
        d("gemini-1.5-flash", 3.0, 3.0),
        d("gpt-4o-mini", 5.0, 4.0),
        d("gpt-4o", 7.5, 7.5),
        d("o1-mini", 8.5, 8.5),
        d("claude-3.5-sonnet", 10.0, 10.0),
        d("gpt-4", 10.0, 8.0),
    ]
}

/// Gateway whose listed models answer through delayed mock backends,
/// keeping each model's registry pricing and windows.
pub fn mock_gateway(registry: Arc<ModelRegistry>, clock: Arc<dyn Clock>, delays: &[MockDelay]) -> Gateway {
    delays
        .iter()
        .fold(Gateway::builder(registry, clock), |builder, d| {
            let backend = MockBackend::new()
                .with_delay(d.summary)
                .with_task_delay("summary", d.summary)
                .with_task_delay("query", d.query);
            builder.backend_for_model(d.model_id.clone(), Arc::new(backend))
        })
        .build()
}
