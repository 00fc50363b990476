use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn,review_insight=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    review_insight_service::cli::run(review_insight_service::cli::Cli::parse())
}
