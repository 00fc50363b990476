//! Line-delimited audit log of completions.

use std::io::Write;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::money::Usd;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub timestamp: DateTime<Utc>,
    pub model_id: String,
    pub status: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub cost: Usd,
    pub latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct AuditLog {
    sink: Mutex<Box<dyn Write + Send>>,
}

impl AuditLog {
    pub fn new(sink: impl Write + Send + 'static) -> Self {
        Self {
            sink: Mutex::new(Box::new(sink)),
        }
    }

    pub fn record(&self, record: &AuditRecord) {
        let line = serde_json::to_string(record).expect("audit record serializes");
        let mut sink = self.sink.lock().expect("audit lock poisoned");
        // audit failures must not fail the completion
        let _ = writeln!(sink, "{line}");
        let _ = sink.flush();
    }
}

impl std::fmt::Debug for AuditLog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuditLog").finish_non_exhaustive()
    }
}
