//! Command-line interface.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use review_insight::bench::{
    emit_report, emit_retrieval_report, mock_gateway, run_llm_bench, run_retrieval_bench, table3_mock_delays, BenchPlan,
    ReportFormat,
};
use review_insight::ingestion::{DelayedProvider, FetchRequest, Ingestor, ReviewProvider};
use review_insight::insight::InsightEngine;
use review_insight::review::validate_listing_url;
use review_insight::SimulatedClock;
use serde_json::json;

use crate::app::{App, ServiceError};
use crate::config::{ConfigOverrides, LlmMode, ServiceConfig};
use crate::http::{router, HttpAudit};

#[derive(Debug, Parser)]
#[command(name = "review-insight", version, about = "Summaries and answers grounded in a listing's guest reviews")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "REVIEW_INSIGHT_CONFIG")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub fixtures_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub results_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub llm_mode: Option<Mode>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fetch a listing's reviews into the cache.
    Fetch {
        url: String,
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        max: Option<usize>,
        /// Ignore a fresh cached corpus.
        #[arg(long)]
        refresh: bool,
    },
    /// Summarize a listing's reviews.
    Summarize {
        url: String,
        #[arg(long)]
        lang: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        provider: Option<String>,
        /// Print the full result document instead of the text.
        #[arg(long)]
        json: bool,
    },
    /// Ask a question about a listing.
    Ask {
        url: String,
        question: String,
        #[arg(long)]
        lang: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Benchmark the models (mock delays by default) and write a report.
    Bench {
        /// Call the real provider APIs on the wall clock.
        #[arg(long)]
        live: bool,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = Format::Markdown)]
        format: Format,
        /// Listing to benchmark on; defaults to the configured bench listing.
        #[arg(long)]
        url: Option<String>,
        /// Benchmark the review providers instead of the models.
        #[arg(long)]
        retrieval: bool,
    },
    /// List the model registry.
    Models {
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        bind: Option<SocketAddr>,
        /// Directory served at `/` (the browser front end).
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<ServiceConfig, ServiceError> {
    let mut overrides = ConfigOverrides {
        cache_dir: cli.cache_dir.clone(),
        fixtures_dir: cli.fixtures_dir.clone(),
        results_dir: cli.results_dir.clone(),
        llm_mode: cli.llm_mode.map(|m| match m {
            Mode::Mock => LlmMode::Mock,
            Mode::Live => LlmMode::Live,
        }),
        ..Default::default()
    };
    if let Command::Serve { bind, static_dir } = &cli.command {
        overrides.bind = *bind;
        overrides.static_dir = static_dir.clone();
    }
    Ok(ServiceConfig::load(cli.config.as_deref(), std::env::vars(), &overrides)?)
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn execute(cli: Cli) -> Result<(), ServiceError> {
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Fetch {
            url,
            provider,
            max,
            refresh,
        } => {
            let app = App::new(config)?;
            let (corpus, metrics) = app.fetch_now(&url, provider.as_deref(), max, refresh)?;
            print_json(&json!({
                "listing_id": corpus.listing.listing_id,
                "url": corpus.listing.url,
                "reviews": corpus.len(),
                "source": corpus.source,
                "from_cache": metrics.is_none(),
                "metrics": metrics,
            }));
        }
        Command::Summarize {
            url,
            lang,
            model,
            provider,
            json,
        } => {
            let app = App::new(config)?;
            let (corpus, _) = app.fetch_now(&url, provider.as_deref(), None, false)?;
            let result = app.summary(&corpus, lang.as_deref(), model.as_deref())?;
            if json {
                print_json(&result);
            } else {
                println!("{}", result.text);
            }
        }
        Command::Ask {
            url,
            question,
            lang,
            model,
            provider,
            json,
        } => {
            if question.trim().is_empty() {
                return Err(review_insight::insight::InsightError::EmptyQuestion.into());
            }
            let app = App::new(config)?;
            let (corpus, _) = app.fetch_now(&url, provider.as_deref(), None, false)?;
            let result = app.query(&corpus, &question, lang.as_deref(), model.as_deref())?;
            if json {
                print_json(&result);
            } else {
                println!("{}", result.text);
            }
        }
        Command::Bench {
            live,
            trials,
            format,
            url,
            retrieval,
        } => {
            if live {
                config.llm_mode = LlmMode::Live;
            }
            let format = match format {
                Format::Markdown => ReportFormat::MarkdownTable,
                Format::Csv => ReportFormat::Csv,
            };
            let url = url.unwrap_or_else(|| config.bench_listing_url.clone());
            let results_dir = config.results_dir.clone();
            let app = App::new(config)?;
            let (name, bytes) = if retrieval {
                ("retrieval-bench", retrieval_bench(&app, &url, live, format)?)
            } else {
                ("llm-bench", llm_bench(&app, &url, live, trials, format)?)
            };
            let path = write_report(&results_dir, name, format, &bytes, &app)?;
            print_json(&json!({ "report": path }));
        }
        Command::Models { json } => {
            let app = App::new(config)?;
            let models = app.models();
            if json {
                let rows: Vec<_> = models.iter().map(|m| (**m).clone()).collect();
                print_json(&rows);
            } else {
                println!(
                    "{:<20} {:>10} {:>10} {:>9} {:>10}  available",
                    "model", "in $/1M", "out $/1M", "prompt", "completion"
                );
                for m in models {
                    println!(
                        "{:<20} {:>10} {:>10} {:>9} {:>10}  {}",
                        m.model_id,
                        m.input_cost_per_1m.amount(),
                        m.output_cost_per_1m.amount(),
                        m.prompt_window,
                        m.completion_window,
                        if m.available { "yes" } else { "no" }
                    );
                }
            }
        }
        Command::Serve { .. } => serve(config)?,
    }
    Ok(())
}

fn llm_bench(app: &App, url: &str, live: bool, trials: usize, format: ReportFormat) -> Result<Vec<u8>, ServiceError> {
    let (corpus, _) = app.fetch_now(url, None, None, false)?;
    let mut plan = BenchPlan::table3();
    plan.trials = trials;
    let report = if live {
        run_llm_bench(&plan, app.engine(), &corpus)
    } else {
        let clock = Arc::new(SimulatedClock::at_default_epoch());
        let gateway = mock_gateway(Arc::clone(app.registry()), clock, &table3_mock_delays());
        run_llm_bench(&plan, &InsightEngine::new(Arc::new(gateway)), &corpus)
    }
    .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    emit_report(&report, format).map_err(|e| ServiceError::Io(e.to_string()))
}

/// Without `--live`, provider latencies are injected on a simulated clock.
fn retrieval_bench(app: &App, url: &str, live: bool, format: ReportFormat) -> Result<Vec<u8>, ServiceError> {
    let listing = validate_listing_url(url).map_err(review_insight::ingestion::IngestError::from)?;
    let providers = app.providers(&["arel", "caprolok", "scraper"])?;
    let (providers, ingestor): (Vec<Arc<dyn ReviewProvider>>, Ingestor) = if live {
        (providers, Ingestor::new(Arc::clone(app.clock())))
    } else {
        let delayed = providers
            .into_iter()
            .zip([25, 35, 5])
            .map(|(p, secs)| Arc::new(DelayedProvider::new(p, Duration::from_secs(secs))) as Arc<dyn ReviewProvider>)
            .collect();
        (delayed, Ingestor::new(Arc::new(SimulatedClock::at_default_epoch())))
    };
    let report = run_retrieval_bench(&providers, &FetchRequest::new(listing), &ingestor)
        .map_err(|e| ServiceError::BadRequest(e.to_string()))?;
    emit_retrieval_report(&report, format).map_err(|e| ServiceError::Io(e.to_string()))
}

fn write_report(dir: &Path, name: &str, format: ReportFormat, bytes: &[u8], app: &App) -> Result<PathBuf, ServiceError> {
    std::fs::create_dir_all(dir).map_err(|e| ServiceError::Io(format!("{}: {e}", dir.display())))?;
    let ext = match format {
        ReportFormat::MarkdownTable => "md",
        ReportFormat::Csv => "csv",
    };
    let stamp = app.clock().utc().format("%Y%m%dT%H%M%SZ");
    let mut path = dir.join(format!("{name}-{stamp}.{ext}"));
    let mut n = 1;
    while path.exists() {
        n += 1;
        path = dir.join(format!("{name}-{stamp}-{n}.{ext}"));
    }
    std::fs::write(&path, bytes).map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let bind = config.bind;
    let audit_path = config.cache_dir.join("http-audit.log");
    let app = Arc::new(App::new(config)?);
    let audit_file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&audit_path)
        .map_err(|e| ServiceError::Io(format!("{}: {e}", audit_path.display())))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| ServiceError::Io(e.to_string()))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| ServiceError::Io(format!("bind {bind}: {e}")))?;
        tracing::info!(%bind, "listening");
        axum::serve(listener, router(app, HttpAudit::new(audit_file)))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| ServiceError::Io(e.to_string()))
    })
}
