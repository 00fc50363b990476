//! Fetch jobs and their flat-file store.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use review_insight::review::ListingId;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Pending,
    Fetching,
    Ready,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Ready | Self::Failed)
    }

    /// Allowed moves: pending→fetching, fetching→ready, fetching→failed.
    /// A pending job may also fail before it starts.
    pub fn can_become(self, next: JobState) -> bool {
        use JobState::*;
        matches!((self, next), (Pending, Fetching) | (Pending, Failed) | (Fetching, Ready) | (Fetching, Failed))
    }

    fn rank(self) -> u8 {
        match self {
            Self::Pending => 0,
            Self::Fetching => 1,
            Self::Ready | Self::Failed => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobFailure {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub listing_id: ListingId,
    pub url: String,
    pub provider: String,
    pub state: JobState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<JobFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_count: Option<usize>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum JobError {
    #[error("unknown job {0}")]
    UnknownJob(String),
    #[error("job {job_id} cannot move from {from:?} to {to:?}")]
    InvalidTransition { job_id: String, from: JobState, to: JobState },
    #[error("job store: {0}")]
    Io(String),
}

pub struct JobStore {
    dir: Option<PathBuf>,
    jobs: RwLock<HashMap<String, JobRecord>>,
}

impl JobStore {
    pub fn in_memory() -> Self {
        Self {
            dir: None,
            jobs: RwLock::new(HashMap::new()),
        }
    }

    /// Opens `dir`, loading every job record already stored there. Jobs
    /// left unfinished by a previous process are marked failed.
    pub fn open(dir: impl Into<PathBuf>, now: DateTime<Utc>) -> Result<Self, JobError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| JobError::Io(e.to_string()))?;
        let mut jobs = HashMap::new();
        for entry in std::fs::read_dir(&dir).map_err(|e| JobError::Io(e.to_string()))? {
            let path = entry.map_err(|e| JobError::Io(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read_to_string(&path).map_err(|e| JobError::Io(e.to_string()))?;
            let Ok(mut job) = serde_json::from_str::<JobRecord>(&text) else {
                tracing::warn!(path = %path.display(), "skipping unreadable job record");
                continue;
            };
            if !job.state.is_terminal() {
                job.state = JobState::Failed;
                job.failure = Some(JobFailure {
                    error: "Interrupted".into(),
                    message: "the service stopped before the fetch finished".into(),
                });
                job.updated_at = now;
            }
            jobs.insert(job.job_id.clone(), job);
        }
        let store = Self {
            dir: Some(dir),
            jobs: RwLock::new(jobs),
        };
        for job in store.jobs.read().unwrap().values() {
            store.persist(job)?;
        }
        Ok(store)
    }

    fn persist(&self, job: &JobRecord) -> Result<(), JobError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(format!("{}.json", job.job_id));
        let tmp = path.with_extension("json.tmp");
        let text = serde_json::to_string_pretty(job).expect("job record serializes");
        std::fs::write(&tmp, text)
            .and_then(|()| std::fs::rename(&tmp, &path))
            .map_err(|e| JobError::Io(e.to_string()))
    }

    pub fn insert(&self, job: JobRecord) -> Result<(), JobError> {
        let mut jobs = self.jobs.write().unwrap();
        self.persist(&job)?;
        jobs.insert(job.job_id.clone(), job);
        Ok(())
    }

    pub fn get(&self, job_id: &str) -> Option<JobRecord> {
        self.jobs.read().unwrap().get(job_id).cloned()
    }

    /// Most recently created job for a listing.
    pub fn latest_for(&self, listing_id: &ListingId) -> Option<JobRecord> {
        self.jobs
            .read()
            .unwrap()
            .values()
            .filter(|j| &j.listing_id == listing_id)
            .max_by(|a, b| a.created_at.cmp(&b.created_at).then(a.state.rank().cmp(&b.state.rank())))
            .cloned()
    }

    /// Moves a job forward, applying `update` to the record on success.
    pub fn transition(
        &self,
        job_id: &str,
        to: JobState,
        now: DateTime<Utc>,
        update: impl FnOnce(&mut JobRecord),
    ) -> Result<JobRecord, JobError> {
        let mut jobs = self.jobs.write().unwrap();
        let job = jobs.get_mut(job_id).ok_or_else(|| JobError::UnknownJob(job_id.into()))?;
        if !job.state.can_become(to) {
            return Err(JobError::InvalidTransition {
                job_id: job_id.into(),
                from: job.state,
                to,
            });
        }
        let mut next = job.clone();
        next.state = to;
        next.updated_at = now;
        update(&mut next);
        self.persist(&next)?;
        *job = next.clone();
        Ok(next)
    }

    pub fn len(&self) -> usize {
        self.jobs.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn job(id: &str, at: DateTime<Utc>) -> JobRecord {
        JobRecord {
            job_id: id.into(),
            listing_id: ListingId::from_canonical_url("https://www.booking.com/hotel/gr/x.html"),
            url: "https://www.booking.com/hotel/gr/x.html".into(),
            provider: "fixture".into(),
            state: JobState::Pending,
            failure: None,
            review_count: None,
            created_at: at,
            updated_at: at,
        }
    }

    const ALL: [JobState; 4] = [JobState::Pending, JobState::Fetching, JobState::Ready, JobState::Failed];

    proptest! {
        #[test]
        fn state_never_regresses(events in proptest::collection::vec(0usize..4, 0..40)) {
            let store = JobStore::in_memory();
            let t0 = Utc::now();
            store.insert(job("j", t0)).unwrap();
            let mut history = vec![JobState::Pending];
            for e in events {
                let before = store.get("j").unwrap().state;
                let result = store.transition("j", ALL[e], t0, |_| {});
                let after = store.get("j").unwrap().state;
                match result {
                    Ok(_) => prop_assert!(before.can_become(after) && after.rank() > before.rank()),
                    Err(_) => prop_assert_eq!(before, after),
                }
                history.push(after);
            }
            prop_assert!(history.windows(2).all(|w| w[0].rank() <= w[1].rank()));
            let terminal_at = history.iter().position(|s| s.is_terminal());
            if let Some(i) = terminal_at {
                prop_assert!(history[i..].iter().all(|s| *s == history[i]));
            }
        }
    }

    #[test]
    fn records_survive_a_restart() {
        let dir = tempfile::tempdir().unwrap();
        let now = Utc::now();
        {
            let store = JobStore::open(dir.path(), now).unwrap();
            store.insert(job("done", now)).unwrap();
            store.transition("done", JobState::Fetching, now, |_| {}).unwrap();
            store
                .transition("done", JobState::Ready, now, |j| j.review_count = Some(200))
                .unwrap();
            store.insert(job("stuck", now)).unwrap();
        }
        let store = JobStore::open(dir.path(), now).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.get("done").unwrap().review_count, Some(200));
        let stuck = store.get("stuck").unwrap();
        assert_eq!(stuck.state, JobState::Failed);
        assert_eq!(stuck.failure.unwrap().error, "Interrupted");
    }
}
