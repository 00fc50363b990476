//! HTTP service and command-line front end for review-insight.

pub mod app;
pub mod cli;
pub mod config;
pub mod http;
pub mod jobs;
pub mod live;

pub use app::{App, ServiceError};
pub use config::{ConfigOverrides, LlmMode, ServiceConfig};
