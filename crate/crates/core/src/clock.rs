//! Injectable time source.
//!
//! Everything that measures latency, backs off, or ages a cache entry reads
//! time through [`Clock`], so tests and benchmarks can run against a
//! [`SimulatedClock`] that advances only when something sleeps on it.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};

pub trait Clock: Send + Sync {
    /// Monotonic time since the clock's origin.
    fn monotonic(&self) -> Duration;

    /// Wall-clock time.
    fn utc(&self) -> DateTime<Utc>;

    fn sleep(&self, duration: Duration);

    fn is_simulated(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct SystemClock {
    origin: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn monotonic(&self) -> Duration {
        self.origin.elapsed()
    }

    fn utc(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// A clock that only moves when slept on or explicitly advanced.
///
/// Clones share the same timeline.
#[derive(Debug, Clone)]
pub struct SimulatedClock {
    start: DateTime<Utc>,
    elapsed: Arc<Mutex<Duration>>,
}

impl SimulatedClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self {
            start,
            elapsed: Arc::new(Mutex::new(Duration::ZERO)),
        }
    }

    /// Simulated clock starting at 2024-10-01T00:00:00Z.
    pub fn at_default_epoch() -> Self {
        let start = DateTime::parse_from_rfc3339("2024-10-01T00:00:00Z")
            .expect("valid literal")
            .with_timezone(&Utc);
        Self::new(start)
    }

    pub fn advance(&self, by: Duration) {
        let mut elapsed = self.elapsed.lock().expect("clock mutex poisoned");
        *elapsed += by;
    }

    pub fn set_elapsed(&self, to: Duration) {
        *self.elapsed.lock().expect("clock mutex poisoned") = to;
    }
}

impl Clock for SimulatedClock {
    fn monotonic(&self) -> Duration {
        *self.elapsed.lock().expect("clock mutex poisoned")
    }

    fn utc(&self) -> DateTime<Utc> {
        let elapsed = self.monotonic();
        self.start + chrono::Duration::from_std(elapsed).unwrap_or(chrono::Duration::MAX)
    }

    fn sleep(&self, duration: Duration) {
        self.advance(duration);
    }

    fn is_simulated(&self) -> bool {
        true
    }
}
