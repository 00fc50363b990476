//! Review insight engine for short-rental listings.
//!
//! Reviews are ingested from pluggable providers into one normalized
//! [`review::ReviewCorpus`], packed under a model's token budget by
//! [`retrieval`], and summarized or queried through the multi-provider
//! [`gateway`] by the [`insight`] engine. [`bench`] times and costs both
//! halves of the pipeline.

pub mod bench;
pub mod clock;
pub mod gateway;
pub mod ingestion;
pub mod insight;
pub mod money;
pub mod retrieval;
pub mod review;

pub use clock::{Clock, SimulatedClock, SystemClock};
pub use money::Usd;
