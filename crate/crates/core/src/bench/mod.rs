//! Latency and cost benchmarks over models and review providers.
//!
//! [`run_llm_bench`] times summary and query calls per model;
//! [`run_retrieval_bench`] times and prices one fetch per provider. Both
//! record per-cell failures in the report instead of aborting, and both
//! reports render to markdown or CSV through [`emit_report`] and
//! [`emit_retrieval_report`].

mod llm;
mod report;
mod retrieval;

pub use llm::{
    mock_gateway, run_llm_bench, table3_mock_delays, BenchPlan, BenchReport, BenchRole, BenchRow, ClockKind,
    MockDelay, DEFAULT_BENCH_QUESTION,
};
pub use report::{emit_report, emit_retrieval_report, ReportFormat};
pub use retrieval::{run_retrieval_bench, RetrievalBenchReport, RetrievalRow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("bench plan: {0}")]
    InvalidPlan(String),
    #[error("nothing to benchmark")]
    EmptyInput,
    #[error("report has no rows")]
    EmptyReport,
    #[error("csv: {0}")]
    Csv(String),
}
