//! Sliding-window rate limiter over requests/minute, requests/day and
//! tokens/minute.
//!
//! A grant made at time `g` counts against a window of length `W` at time
//! `t` while `t − g < W`. A request is granted only if every dimension
//! admits it; otherwise the limiter reports the earliest moment at which all
//! of them would, assuming no other grants in between.

use std::collections::VecDeque;
use std::time::Duration;

use serde::Serialize;

use super::RateLimitPolicy;
use crate::clock::Clock;

pub const MINUTE: Duration = Duration::from_secs(60);
pub const DAY: Duration = Duration::from_secs(24 * 60 * 60);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Permit {
    Granted,
    RetryAfter { wait: Duration },
    /// The request alone exceeds the tokens-per-minute capacity.
    TokenRequestTooLarge { requested: u64, limit: u64 },
}

#[derive(Debug, Clone)]
pub struct RateLimiter {
    policy: RateLimitPolicy,
    /// (grant time, tokens), oldest first.
    grants: VecDeque<(Duration, u64)>,
}

impl RateLimiter {
    pub fn new(policy: RateLimitPolicy) -> Self {
        Self {
            policy,
            grants: VecDeque::new(),
        }
    }

    pub fn policy(&self) -> &RateLimitPolicy {
        &self.policy
    }

    pub fn acquire(&mut self, tokens: u64, clock: &dyn Clock) -> Permit {
        self.acquire_at(tokens, clock.monotonic())
    }

    /// `now` must not go backwards between calls.
    pub fn acquire_at(&mut self, tokens: u64, now: Duration) -> Permit {
        if let Some(limit) = self.policy.tokens_per_minute {
            if tokens > limit {
                return Permit::TokenRequestTooLarge { requested: tokens, limit };
            }
        }
        self.prune(now);

        let mut wait = Duration::ZERO;
        if let Some(rpm) = self.policy.requests_per_minute {
            wait = wait.max(self.count_wait(now, MINUTE, rpm));
        }
        if let Some(rpd) = self.policy.requests_per_day {
            wait = wait.max(self.count_wait(now, DAY, rpd));
        }
        if let Some(tpm) = self.policy.tokens_per_minute {
            wait = wait.max(self.token_wait(now, tokens, tpm));
        }

        if wait.is_zero() {
            self.grants.push_back((now, tokens));
            Permit::Granted
        } else {
            Permit::RetryAfter { wait }
        }
    }

    fn prune(&mut self, now: Duration) {
        while let Some(&(at, _)) = self.grants.front() {
            if now.saturating_sub(at) >= DAY {
                self.grants.pop_front();
            } else {
                break;
            }
        }
    }

    fn in_window(&self, now: Duration, window: Duration) -> impl Iterator<Item = &(Duration, u64)> {
        self.grants
            .iter()
            .skip_while(move |(at, _)| now.saturating_sub(*at) >= window)
    }

    /// Time until the window holds fewer than `limit` grants.
    fn count_wait(&self, now: Duration, window: Duration, limit: u32) -> Duration {
        let live: Vec<Duration> = self.in_window(now, window).map(|(at, _)| *at).collect();
        let limit = limit as usize;
        if live.len() < limit {
            return Duration::ZERO;
        }
        // the oldest `live.len() - limit + 1` grants must expire
        let must_expire = live[live.len() - limit];
        (must_expire + window).saturating_sub(now)
    }

    fn token_wait(&self, now: Duration, tokens: u64, limit: u64) -> Duration {
        let live: Vec<(Duration, u64)> = self.in_window(now, MINUTE).copied().collect();
        let mut used: u64 = live.iter().map(|(_, t)| t).sum();
        if used + tokens <= limit {
            return Duration::ZERO;
        }
        for (at, t) in live {
            used -= t;
            if used + tokens <= limit {
                return (at + MINUTE).saturating_sub(now);
            }
        }
        unreachable!("a single request within the limit always fits an empty window")
    }
}
