//! Operations shared by the HTTP handlers and the CLI.

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use review_insight::gateway::wire::wire_for;
use review_insight::gateway::{
    AuditLog, CompletionBackend, Gateway, GatewayError, HttpBackend, MockBackend, ModelProfile, ModelRegistry,
    ProviderKind,
};
use review_insight::ingestion::{
    ApiProvider, CorpusCache, FetchMetrics, FetchRequest, FixtureProvider, IngestError, Ingestor, PageSource,
    ProviderCatalog, RecordedResponses, ReviewProvider, ScraperProvider, SnapshotPages,
};
use review_insight::insight::{InsightEngine, InsightError, InsightResult, QueryRequest, SummaryRequest};
use review_insight::review::{validate_listing_url, Listing, ListingId, ProviderSchema, ReviewCorpus};
use review_insight::{Clock, SystemClock};

use crate::config::{ConfigError, LlmMode, ServiceConfig};
use crate::jobs::{JobError, JobFailure, JobRecord, JobState, JobStore};
use crate::live::{LivePages, UreqTransport};

const LIVE_PAGE_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Insight(#[from] InsightError),
    #[error(transparent)]
    Job(#[from] JobError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown listing {0}")]
    UnknownListing(String),
    #[error("listing {listing_id} is not ready (job {job_id} is {state:?})")]
    NotReady {
        listing_id: ListingId,
        job_id: String,
        state: JobState,
    },
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Io(String),
}

impl ServiceError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Ingest(e) => e.kind(),
            Self::Insight(e) => e.kind(),
            Self::Job(JobError::UnknownJob(_)) => "UnknownJob",
            Self::Job(_) => "JobStoreError",
            Self::Config(_) => "InvalidConfig",
            Self::UnknownListing(_) => "UnknownListing",
            Self::NotReady { .. } => "NotReady",
            Self::BadRequest(_) => "BadRequest",
            Self::Io(_) => "IoError",
        }
    }

    pub fn status(&self) -> u16 {
        match self {
            Self::Ingest(IngestError::ProviderDisabled(_) | IngestError::MissingCredentials(_)) => 503,
            Self::Ingest(IngestError::Review(_) | IngestError::UnknownProvider(_) | IngestError::InvalidRequest(_)) => {
                400
            }
            Self::Ingest(_) => 502,
            Self::Insight(InsightError::Gateway { source, .. }) => match source {
                GatewayError::UnknownModel(_) | GatewayError::ModelUnavailable(_) | GatewayError::InvalidRequest(_) => {
                    400
                }
                GatewayError::RateLimited { .. } => 429,
                GatewayError::Timeout(_) => 504,
                _ => 502,
            },
            Self::Insight(InsightError::EmptyCorpus | InsightError::ListingMismatch { .. }) => 500,
            Self::Insight(InsightError::Template(_)) => 500,
            Self::Insight(InsightError::Retrieval(review_insight::retrieval::RetrievalError::BudgetTooSmall {
                ..
            })) => 422,
            Self::Insight(_) => 400,
            Self::Job(JobError::UnknownJob(_)) | Self::UnknownListing(_) => 404,
            Self::NotReady { .. } => 409,
            Self::BadRequest(_) => 400,
            Self::Job(_) | Self::Config(_) | Self::Io(_) => 500,
        }
    }

    /// The machine-readable error document used on stderr and in HTTP bodies.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() })
    }
}

/// Outcome of a listing submission.
#[derive(Debug, Clone)]
pub struct Submission {
    pub job: JobRecord,
    /// True when a new fetch must be run for this job.
    pub needs_fetch: bool,
}

pub struct App {
    pub config: ServiceConfig,
    clock: Arc<dyn Clock>,
    registry: Arc<ModelRegistry>,
    engine: InsightEngine,
    ingestor: Ingestor,
    providers: HashMap<String, Arc<dyn ReviewProvider>>,
    jobs: JobStore,
    corpora: RwLock<HashMap<ListingId, Arc<ReviewCorpus>>>,
    submit_lock: Mutex<()>,
}

impl App {
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        Self::with_clock(config, Arc::new(SystemClock::new()))
    }

    pub fn with_clock(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let registry = Arc::new(build_registry(&config)?);
        config.validate(&registry)?;
        std::fs::create_dir_all(&config.cache_dir).map_err(|e| ServiceError::Io(e.to_string()))?;

        let audit_path = config.cache_dir.join("llm-audit.log");
        let audit_file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&audit_path)
            .map_err(|e| ServiceError::Io(format!("{}: {e}", audit_path.display())))?;
        let gateway = build_gateway(&config, Arc::clone(&registry), Arc::clone(&clock))
            .audit(AuditLog::new(audit_file))
            .build();
        let engine = InsightEngine::new(Arc::new(gateway)).with_summary_ttl(config.cache_ttl());
        let ingestor =
            Ingestor::new(Arc::clone(&clock)).with_cache(CorpusCache::new(&config.cache_dir, config.cache_ttl()));
        let providers = build_providers(&config)?;
        let jobs = JobStore::open(config.cache_dir.join("jobs"), clock.utc())?;
        Ok(Self {
            config,
            clock,
            registry,
            engine,
            ingestor,
            providers,
            jobs,
            corpora: RwLock::new(HashMap::new()),
            submit_lock: Mutex::new(()),
        })
    }

    pub fn registry(&self) -> &Arc<ModelRegistry> {
        &self.registry
    }

    pub fn engine(&self) -> &InsightEngine {
        &self.engine
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    pub fn models(&self) -> Vec<Arc<ModelProfile>> {
        self.registry.list()
    }

    /// Provider handles by id, in the order given.
    pub fn providers(&self, ids: &[&str]) -> Result<Vec<Arc<dyn ReviewProvider>>, ServiceError> {
        ids.iter()
            .map(|id| {
                self.providers
                    .get(*id)
                    .cloned()
                    .ok_or_else(|| IngestError::UnknownProvider((*id).to_owned()).into())
            })
            .collect()
    }

    pub fn job(&self, job_id: &str) -> Result<JobRecord, ServiceError> {
        self.jobs.get(job_id).ok_or_else(|| JobError::UnknownJob(job_id.into()).into())
    }

    fn provider(&self, provider_id: Option<&str>) -> Result<&Arc<dyn ReviewProvider>, ServiceError> {
        let id = provider_id.unwrap_or(&self.config.default_provider);
        let provider = self
            .providers
            .get(id)
            .ok_or_else(|| IngestError::UnknownProvider(id.to_owned()))?;
        if !provider.config().enabled {
            return Err(IngestError::ProviderDisabled(id.to_owned()).into());
        }
        Ok(provider)
    }

    fn fresh_corpus(&self, listing_id: &ListingId) -> Result<Option<Arc<ReviewCorpus>>, ServiceError> {
        let now = self.clock.utc();
        let ttl = chrono::Duration::from_std(self.config.cache_ttl()).expect("ttl fits");
        if let Some(corpus) = self.corpora.read().unwrap().get(listing_id) {
            if corpus.fetched_at + ttl > now {
                return Ok(Some(Arc::clone(corpus)));
            }
        }
        let cached = self
            .ingestor
            .cache()
            .map(|c| c.load_fresh(listing_id, now))
            .transpose()?
            .flatten();
        Ok(cached.map(|corpus| self.remember(corpus)))
    }

    fn remember(&self, corpus: ReviewCorpus) -> Arc<ReviewCorpus> {
        let corpus = Arc::new(corpus);
        self.corpora
            .write()
            .unwrap()
            .insert(corpus.listing.listing_id.clone(), Arc::clone(&corpus));
        corpus
    }

    /// Registers interest in a listing. Returns the existing job while its
    /// fetch is running or its corpus is still fresh; otherwise a new
    /// pending job that the caller must hand to [`App::run_job`].
    pub fn submit(&self, url: &str, provider_id: Option<&str>) -> Result<Submission, ServiceError> {
        let listing = validate_listing_url(url).map_err(IngestError::from)?;
        let provider = self.provider(provider_id)?;
        let provider_id = provider.config().provider_id.clone();
        let _guard = self.submit_lock.lock().unwrap();

        let latest = self.jobs.latest_for(&listing.listing_id);
        if let Some(job) = &latest {
            if !job.state.is_terminal() {
                return Ok(Submission {
                    job: job.clone(),
                    needs_fetch: false,
                });
            }
        }
        let now = self.clock.utc();
        if let Some(corpus) = self.fresh_corpus(&listing.listing_id)? {
            if let Some(job) = latest.filter(|j| j.state == JobState::Ready) {
                return Ok(Submission { job, needs_fetch: false });
            }
            // fresh corpus on disk from an earlier process or a CLI fetch
            let mut job = new_job(&listing, &provider_id, now);
            job.state = JobState::Ready;
            job.review_count = Some(corpus.len());
            self.jobs.insert(job.clone())?;
            return Ok(Submission { job, needs_fetch: false });
        }
        let job = new_job(&listing, &provider_id, now);
        self.jobs.insert(job.clone())?;
        Ok(Submission { job, needs_fetch: true })
    }

    /// Runs a pending job's fetch to completion. Blocking.
    pub fn run_job(&self, job_id: &str) -> Result<JobRecord, ServiceError> {
        let job = self.jobs.transition(job_id, JobState::Fetching, self.clock.utc(), |_| {})?;
        let outcome = validate_listing_url(&job.url)
            .map_err(IngestError::from)
            .and_then(|listing| {
                let provider = self
                    .providers
                    .get(&job.provider)
                    .ok_or_else(|| IngestError::UnknownProvider(job.provider.clone()))?;
                self.ingestor.fetch_reviews(&FetchRequest::new(listing), provider.as_ref())
            });
        let now = self.clock.utc();
        let record = match outcome {
            Ok((corpus, metrics)) => {
                tracing::info!(
                    job_id,
                    provider = %metrics.provider,
                    reviews = metrics.reviews_returned,
                    wall_time_s = metrics.wall_time.as_secs_f64(),
                    "fetch finished"
                );
                let count = corpus.len();
                self.remember(corpus);
                self.jobs
                    .transition(job_id, JobState::Ready, now, |j| j.review_count = Some(count))?
            }
            Err(e) => {
                tracing::warn!(job_id, error = e.kind(), "fetch failed: {e}");
                self.jobs.transition(job_id, JobState::Failed, now, |j| {
                    j.failure = Some(JobFailure {
                        error: e.kind().into(),
                        message: e.to_string(),
                    })
                })?
            }
        };
        Ok(record)
    }

    /// Corpus of a listing whose latest job is ready.
    pub fn ready_corpus(&self, listing_id: &str) -> Result<Arc<ReviewCorpus>, ServiceError> {
        let id = ListingId::parse(listing_id).ok_or_else(|| ServiceError::UnknownListing(listing_id.into()))?;
        match self.jobs.latest_for(&id) {
            Some(job) if job.state != JobState::Ready => {
                return Err(ServiceError::NotReady {
                    listing_id: id,
                    job_id: job.job_id,
                    state: job.state,
                })
            }
            Some(_) => {}
            None => {
                return self
                    .fresh_corpus(&id)?
                    .ok_or_else(|| ServiceError::UnknownListing(listing_id.into()))
            }
        }
        if let Some(corpus) = self.corpora.read().unwrap().get(&id) {
            return Ok(Arc::clone(corpus));
        }
        let cached = self.ingestor.cache().map(|c| c.load(&id)).transpose()?.flatten();
        cached
            .map(|(_, corpus)| self.remember(corpus))
            .ok_or_else(|| ServiceError::UnknownListing(listing_id.into()))
    }

    pub fn summary(
        &self,
        corpus: &ReviewCorpus,
        language: Option<&str>,
        model: Option<&str>,
    ) -> Result<InsightResult, ServiceError> {
        let request = SummaryRequest {
            listing_id: corpus.listing.listing_id.clone(),
            language: language.unwrap_or(&self.config.default_language).to_owned(),
            model_id: model.unwrap_or(&self.config.default_model).to_owned(),
        };
        Ok(self.engine.summarize(corpus, &request)?)
    }

    pub fn query(
        &self,
        corpus: &ReviewCorpus,
        question: &str,
        language: Option<&str>,
        model: Option<&str>,
    ) -> Result<InsightResult, ServiceError> {
        let request = QueryRequest {
            listing_id: corpus.listing.listing_id.clone(),
            question: question.to_owned(),
            language: language.unwrap_or(&self.config.default_language).to_owned(),
            model_id: model.unwrap_or(&self.config.default_model).to_owned(),
        };
        Ok(self.engine.answer_query(corpus, &request)?)
    }

    /// Fresh cached corpus or a new blocking fetch. Used by the CLI.
    pub fn fetch_now(
        &self,
        url: &str,
        provider_id: Option<&str>,
        max_reviews: Option<usize>,
        refresh: bool,
    ) -> Result<(Arc<ReviewCorpus>, Option<FetchMetrics>), ServiceError> {
        let listing = validate_listing_url(url).map_err(IngestError::from)?;
        let provider = self.provider(provider_id)?;
        if !refresh && max_reviews.is_none() {
            if let Some(corpus) = self.fresh_corpus(&listing.listing_id)? {
                return Ok((corpus, None));
            }
        }
        let mut request = FetchRequest::new(listing);
        if let Some(max) = max_reviews {
            request = request.with_max_reviews(max);
        }
        let (corpus, metrics) = self.ingestor.fetch_reviews(&request, provider.as_ref())?;
        Ok((self.remember(corpus), Some(metrics)))
    }
}

fn new_job(listing: &Listing, provider: &str, now: chrono::DateTime<chrono::Utc>) -> JobRecord {
    JobRecord {
        job_id: uuid::Uuid::new_v4().simple().to_string(),
        listing_id: listing.listing_id.clone(),
        url: listing.url.clone(),
        provider: provider.to_owned(),
        state: JobState::Pending,
        failure: None,
        review_count: None,
        created_at: now,
        updated_at: now,
    }
}

fn build_registry(config: &ServiceConfig) -> Result<ModelRegistry, ServiceError> {
    let registry = ModelRegistry::seeded();
    if let Some(path) = &config.models_file {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Io(format!("{}: {e}", path.display())))?;
        let extra = ModelRegistry::from_seed(&text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        for profile in extra.list() {
            registry
                .register((*profile).clone())
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
    }
    if config.register_mock_model && !registry.contains("mock") {
        registry
            .register(ModelProfile::mock("mock"))
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    }
    Ok(registry)
}

fn build_gateway(
    config: &ServiceConfig,
    registry: Arc<ModelRegistry>,
    clock: Arc<dyn Clock>,
) -> review_insight::gateway::GatewayBuilder {
    let kinds = [
        ProviderKind::OpenAi,
        ProviderKind::Anthropic,
        ProviderKind::Google,
        ProviderKind::HuggingFace,
    ];
    let mock: Arc<dyn CompletionBackend> = Arc::new(MockBackend::new());
    let profiles = registry.list();
    let mut builder = Gateway::builder(registry, clock).backend_for_provider(ProviderKind::Mock, Arc::clone(&mock));
    for kind in kinds {
        match config.llm_mode {
            LlmMode::Mock => builder = builder.backend_for_provider(kind, Arc::clone(&mock)),
            LlmMode::Live => {
                let Some(wire) = wire_for(kind) else { continue };
                let key = profiles
                    .iter()
                    .filter(|p| p.provider == kind)
                    .filter_map(|p| p.api_key_env.as_deref())
                    .find_map(|var| std::env::var(var).ok());
                match key {
                    Some(key) => {
                        let backend = HttpBackend::new(wire, Arc::new(UreqTransport), key);
                        builder = builder.backend_for_provider(kind, Arc::new(backend));
                    }
                    None => tracing::warn!(?kind, "no API key in the environment; models of this provider are disabled"),
                }
            }
        }
    }
    builder
}

fn build_providers(config: &ServiceConfig) -> Result<HashMap<String, Arc<dyn ReviewProvider>>, ServiceError> {
    let mut catalog = ProviderCatalog::builtin();
    for (id, enabled) in &config.providers {
        catalog.get_mut(id)?.enabled = *enabled;
    }
    let root = &config.fixtures_dir;
    let pages: Box<dyn PageSource> = if config.live_scrape_allowed() {
        tracing::warn!("live scraping is enabled");
        Box::new(LivePages::new(LIVE_PAGE_TIMEOUT))
    } else {
        if config.live_scrape {
            tracing::warn!("live_scrape is set without the acknowledgment; using stored snapshots");
        }
        Box::new(SnapshotPages::new(root))
    };
    let mut providers: HashMap<String, Arc<dyn ReviewProvider>> = HashMap::new();
    let cfg = |id: &str| catalog.get(id).cloned();
    providers.insert("fixture".into(), Arc::new(FixtureProvider::new(cfg("fixture")?, root)));
    providers.insert("scraper".into(), Arc::new(ScraperProvider::new(cfg("scraper")?, pages)));
    for (id, schema) in [("arel", ProviderSchema::Arel), ("caprolok", ProviderSchema::Caprolok)] {
        let source = Box::new(RecordedResponses::new(root, schema));
        providers.insert(id.into(), Arc::new(ApiProvider::new(cfg(id)?, schema, source)));
    }
    Ok(providers)
}
