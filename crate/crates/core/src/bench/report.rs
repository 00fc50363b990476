use std::fmt::Write;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::llm::{BenchReport, BenchRole, BenchRow, ClockKind};
use super::retrieval::RetrievalBenchReport;
use super::BenchError;
use crate::money::Usd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    MarkdownTable,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown" | "markdown_table" | "md" => Ok(Self::MarkdownTable),
            "csv" => Ok(Self::Csv),
            other => Err(BenchError::InvalidPlan(format!("unknown report format {other:?}"))),
        }
    }
}

fn secs(d: Option<Duration>) -> String {
    d.map_or_else(String::new, |d| format!("{:.2}", d.as_secs_f64()))
}

fn money(u: Option<Usd>) -> String {
    u.map_or_else(String::new, |u| u.to_string())
}

/// Pivot cell: the mean, or `min–max` when trials disagree.
fn latency_cell(row: Option<&BenchRow>) -> String {
    let Some(row) = row else { return "n/a".into() };
    if let Some(err) = &row.error {
        return err.clone();
    }
    match (row.min_latency, row.max_latency) {
        (Some(lo), Some(hi)) if lo != hi => format!("{}–{}", secs(Some(lo)), secs(Some(hi))),
        _ => secs(row.mean_latency),
    }
}

/// Deterministic rendering. Markdown has the per-model pivot first, then
/// one detail row per (model, role).
pub fn emit_report(report: &BenchReport, format: ReportFormat) -> Result<Vec<u8>, BenchError> {
    if report.rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    match format {
        ReportFormat::MarkdownTable => Ok(llm_markdown(report).into_bytes()),
        ReportFormat::Csv => llm_csv(report),
    }
}

fn llm_markdown(report: &BenchReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "## LLM performance (summarization and query on {} reviews)\n",
        report.corpus_reviews
    );
    out.push_str("| LLM | Summary Time (s) | Query Time (s) |\n| --- | ---: | ---: |\n");
    let mut models: Vec<&str> = Vec::new();
    for row in &report.rows {
        if !models.contains(&row.model_id.as_str()) {
            models.push(&row.model_id);
        }
    }
    for model in &models {
        let cell = |role| report.rows.iter().find(|r| r.model_id == *model && r.role == role);
        let name = &cell(BenchRole::Summary).or(cell(BenchRole::Query)).expect("model has a row").display_name;
        let _ = writeln!(
            out,
            "| {name} | {} | {} |",
            latency_cell(cell(BenchRole::Summary)),
            latency_cell(cell(BenchRole::Query))
        );
    }

    out.push_str(
        "\n| Model | Role | Samples | Mean (s) | Min (s) | Max (s) | Reviews used | Tokens in (all trials) | Tokens out (all trials) | Cost per call (USD) | Total cost (USD) | Status |\n",
    );
    out.push_str("| --- | --- | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: | ---: | --- |\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            row.model_id,
            row.role.label(),
            row.samples,
            secs(row.mean_latency),
            secs(row.min_latency),
            secs(row.max_latency),
            row.reviews_used,
            row.input_tokens,
            row.output_tokens,
            money(row.cost_per_call()),
            row.total_cost,
            row.error.as_deref().unwrap_or("ok"),
        );
    }
    let clock = match report.clock {
        ClockKind::Real => "real",
        ClockKind::Simulated => "simulated",
    };
    let _ = writeln!(
        out,
        "\nClock: {clock}. Trials per cell: {}. Query: \"{}\"",
        report.trials, report.question
    );
    out
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Result<Vec<u8>, BenchError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header).map_err(|e| BenchError::Csv(e.to_string()))?;
    for row in rows {
        writer.write_record(&row).map_err(|e| BenchError::Csv(e.to_string()))?;
    }
    writer.into_inner().map_err(|e| BenchError::Csv(e.to_string()))
}

fn llm_csv(report: &BenchReport) -> Result<Vec<u8>, BenchError> {
    let rows = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.model_id.clone(),
                r.role.label().into(),
                r.samples.to_string(),
                secs(r.mean_latency),
                secs(r.min_latency),
                secs(r.max_latency),
                r.reviews_used.to_string(),
                r.input_tokens.to_string(),
                r.output_tokens.to_string(),
                money(r.cost_per_call()),
                r.total_cost.to_string(),
                r.error.clone().unwrap_or_else(|| "ok".into()),
            ]
        })
        .collect();
    csv_bytes(
        &[
            "model_id",
            "role",
            "samples",
            "mean_latency_s",
            "min_latency_s",
            "max_latency_s",
            "reviews_used",
            "input_tokens",
            "output_tokens",
            "cost_per_call_usd",
            "total_cost_usd",
            "status",
        ],
        rows,
    )
}

/// Providers as columns, criteria as rows.
pub fn emit_retrieval_report(report: &RetrievalBenchReport, format: ReportFormat) -> Result<Vec<u8>, BenchError> {
    if report.rows.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    let time = |r: &super::RetrievalRow| match &r.error {
        Some(e) => e.clone(),
        None => format!("{:.2} s", r.wall_time.as_secs_f64()),
    };
    let cost = |r: &super::RetrievalRow| {
        if r.cost_per_1000.amount().is_zero() {
            "Free".to_owned()
        } else {
            format!("${:.2} per 1000 reviews", r.cost_per_1000.amount())
        }
    };
    match format {
        ReportFormat::MarkdownTable => {
            let mut out = String::new();
            let names: Vec<&str> = report.rows.iter().map(|r| r.display_name.as_str()).collect();
            let _ = writeln!(out, "| Criterion | {} |", names.join(" | "));
            let _ = writeln!(out, "| --- |{}", " --- |".repeat(names.len()));
            let line = |out: &mut String, label: &str, cells: Vec<String>| {
                let _ = writeln!(out, "| {label} | {} |", cells.join(" | "));
            };
            line(
                &mut out,
                &format!("Retrieval Time ({} reviews)", report.requested_reviews),
                report.rows.iter().map(time).collect(),
            );
            line(&mut out, "Reviews returned", report.rows.iter().map(|r| r.reviews_returned.to_string()).collect());
            line(&mut out, "Cost", report.rows.iter().map(cost).collect());
            line(&mut out, "Fetch cost (USD)", report.rows.iter().map(|r| r.fetch_cost.to_string()).collect());
            line(
                &mut out,
                "Maintenance Effort",
                report.rows.iter().map(|r| r.maintenance.label().to_owned()).collect(),
            );
            Ok(out.into_bytes())
        }
        ReportFormat::Csv => csv_bytes(
            &[
                "provider",
                "wall_time_s",
                "reviews_returned",
                "cost_per_1000_usd",
                "fetch_cost_usd",
                "maintenance",
                "status",
            ],
            report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.provider.clone(),
                        format!("{:.3}", r.wall_time.as_secs_f64()),
                        r.reviews_returned.to_string(),
                        r.cost_per_1000.to_string(),
                        r.fetch_cost.to_string(),
                        r.maintenance.label().into(),
                        r.error.clone().unwrap_or_else(|| "ok".into()),
                    ]
                })
                .collect(),
        ),
    }
}
