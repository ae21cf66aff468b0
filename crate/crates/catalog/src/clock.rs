//! Wall-clock access, injectable so tests can pin timestamps.

use chrono::{SecondsFormat, Utc};
use oc_core::Timestamp;

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

/// UTC time at second precision, RFC 3339 with a `Z` suffix.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp::new(Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
    }
}

/// Always returns the same instant.
#[derive(Debug, Clone)]
pub struct FixedClock(pub Timestamp);

impl FixedClock {
    pub fn at(ts: &str) -> Self {
        FixedClock(Timestamp::new(ts))
    }
}

impl Clock for FixedClock {
    fn now(&self) -> Timestamp {
        self.0.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_clock_is_rfc3339_utc() {
        let ts = SystemClock.now();
        assert!(ts.as_str().ends_with('Z'));
        assert!(chrono::DateTime::parse_from_rfc3339(ts.as_str()).is_ok());
    }
}
