//! Access-link checking.
//!
//! HEAD first, GET when the server refuses HEAD, redirects followed by hand
//! so the hop limit is ours. Only transport failures are retried; an HTTP
//! status, good or bad, is an answer.

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use oc_core::pipeline::classify_http_status;
use oc_core::schema::{LinkOutcome, LinkStatus};
use oc_core::urls::host_of;
use thiserror::Error;

use crate::clock::Clock;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkCheckConfig {
    pub timeout: Duration,
    pub max_attempts: u32,
    /// Pause before attempt n+1 is `backoff[n-1]` (last value repeats).
    pub backoff: Vec<Duration>,
    pub max_redirects: u32,
    pub parallelism: usize,
    /// Minimum gap between two checks that hit the same host.
    pub host_spacing: Duration,
    pub offline: bool,
}

impl Default for LinkCheckConfig {
    fn default() -> Self {
        LinkCheckConfig {
            timeout: Duration::from_secs(10),
            max_attempts: 3,
            backoff: vec![Duration::from_secs(1), Duration::from_secs(2)],
            max_redirects: 5,
            parallelism: 8,
            host_spacing: Duration::from_secs(1),
            offline: false,
        }
    }
}

impl LinkCheckConfig {
    pub fn offline() -> Self {
        LinkCheckConfig { offline: true, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Head,
    Get,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeReply {
    pub status: u16,
    pub location: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("transport failure: {0}")]
    Transport(String),
}

/// One HTTP request without redirect handling.
pub trait HttpProbe: Send + Sync {
    fn request(&self, method: Method, url: &str) -> Result<ProbeReply, ProbeError>;
}

/// [`HttpProbe`] over a ureq agent that never follows redirects and never
/// turns statuses into errors.
pub struct UreqProbe {
    agent: ureq::Agent,
}

impl UreqProbe {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .max_redirects(0)
            .timeout_global(Some(timeout))
            .user_agent(concat!("oc-linkcheck/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        UreqProbe { agent }
    }
}

impl HttpProbe for UreqProbe {
    fn request(&self, method: Method, url: &str) -> Result<ProbeReply, ProbeError> {
        let res = match method {
            Method::Head => self.agent.head(url).call(),
            Method::Get => self.agent.get(url).call(),
        };
        let resp = res.map_err(|e| ProbeError::Transport(e.to_string()))?;
        let location = resp.headers().get("location").and_then(|v| v.to_str().ok()).map(str::to_string);
        Ok(ProbeReply { status: resp.status().as_u16(), location })
    }
}

enum Chain {
    Final(u16),
    TooManyRedirects,
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

pub struct LinkChecker {
    probe: Arc<dyn HttpProbe>,
    cfg: LinkCheckConfig,
    clock: Arc<dyn Clock>,
    sleep: Sleeper,
}

impl LinkChecker {
    pub fn new(probe: Arc<dyn HttpProbe>, cfg: LinkCheckConfig, clock: Arc<dyn Clock>) -> Self {
        LinkChecker { probe, cfg, clock, sleep: Arc::new(thread::sleep) }
    }

    /// Checker backed by [`UreqProbe`].
    pub fn http(cfg: LinkCheckConfig, clock: Arc<dyn Clock>) -> Self {
        let probe = Arc::new(UreqProbe::new(cfg.timeout));
        Self::new(probe, cfg, clock)
    }

    /// Replaces the backoff sleep, e.g. to record pauses in tests.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn config(&self) -> &LinkCheckConfig {
        &self.cfg
    }

    pub fn check(&self, url: &str) -> LinkStatus {
        let status = |outcome, http_status, attempts| LinkStatus {
            url: url.to_string(),
            outcome,
            http_status,
            checked_at: self.clock.now(),
            attempts,
        };
        if self.cfg.offline {
            return status(LinkOutcome::SkippedOffline, None, 0);
        }
        let max = self.cfg.max_attempts.max(1);
        for attempt in 1..=max {
            match self.follow(url) {
                Ok(Chain::Final(code)) => return status(classify_http_status(code), Some(code), attempt),
                Ok(Chain::TooManyRedirects) => return status(LinkOutcome::Unreachable, None, attempt),
                Err(e) => {
                    log::debug!("link check {url} attempt {attempt}: {e}");
                    if attempt < max {
                        (self.sleep)(self.backoff_before(attempt + 1));
                    }
                }
            }
        }
        status(LinkOutcome::Unreachable, None, max)
    }

    /// Checks every url with bounded parallelism, keeping the input order.
    pub fn check_many(&self, urls: &[String]) -> Vec<LinkStatus> {
        if self.cfg.offline || urls.len() <= 1 {
            return urls.iter().map(|u| self.check(u)).collect();
        }
        let queue: Mutex<VecDeque<(usize, &String)>> = Mutex::new(urls.iter().enumerate().collect());
        let results: Mutex<Vec<Option<LinkStatus>>> = Mutex::new(vec![None; urls.len()]);
        let gate: Mutex<HashMap<String, Instant>> = Mutex::new(HashMap::new());
        let workers = self.cfg.parallelism.clamp(1, urls.len());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let Some((i, url)) = queue.lock().unwrap_or_else(|p| p.into_inner()).pop_front() else {
                        break;
                    };
                    self.wait_for_host(&gate, url);
                    let st = self.check(url);
                    results.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(st);
                });
            }
        });
        results
            .into_inner()
            .unwrap_or_else(|p| p.into_inner())
            .into_iter()
            .zip(urls)
            .map(|(r, u)| r.unwrap_or_else(|| self.check(u)))
            .collect()
    }

    fn wait_for_host(&self, gate: &Mutex<HashMap<String, Instant>>, url: &str) {
        if self.cfg.host_spacing.is_zero() {
            return;
        }
        let host = host_of(url).unwrap_or_default();
        let wait = {
            let mut g = gate.lock().unwrap_or_else(|p| p.into_inner());
            let now = Instant::now();
            let slot = g.get(&host).copied().filter(|t| *t > now).unwrap_or(now);
            g.insert(host, slot + self.cfg.host_spacing);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            thread::sleep(wait);
        }
    }

    fn backoff_before(&self, attempt: u32) -> Duration {
        let i = (attempt as usize).saturating_sub(2);
        self.cfg.backoff.get(i).or(self.cfg.backoff.last()).copied().unwrap_or_default()
    }

    fn follow(&self, start: &str) -> Result<Chain, ProbeError> {
        let mut current = start.to_string();
        let mut hops = 0;
        loop {
            let mut reply = self.probe.request(Method::Head, &current)?;
            if reply.status == 405 || reply.status == 501 {
                reply = self.probe.request(Method::Get, &current)?;
            }
            let next = match (&reply.location, reply.status) {
                (Some(loc), 300..=399) => resolve(&current, loc),
                _ => None,
            };
            let Some(next) = next else {
                return Ok(Chain::Final(reply.status));
            };
            if hops == self.cfg.max_redirects {
                return Ok(Chain::TooManyRedirects);
            }
            hops += 1;
            current = next;
        }
    }
}

fn resolve(base: &str, location: &str) -> Option<String> {
    url::Url::parse(base).ok()?.join(location).ok().map(String::from)
}

/// Counts calls and fails every request; proves a code path stayed off the
/// network.
#[derive(Debug, Default)]
pub struct RecordingProbe {
    calls: Mutex<Vec<String>>,
}

impl RecordingProbe {
    pub fn calls(&self) -> Vec<String> {
        self.calls.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl HttpProbe for RecordingProbe {
    fn request(&self, _method: Method, url: &str) -> Result<ProbeReply, ProbeError> {
        self.calls.lock().unwrap_or_else(|p| p.into_inner()).push(url.to_string());
        Err(ProbeError::Transport("recording probe has no network".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::FixedClock;

    /// Serves canned replies per URL; a missing URL is a transport failure.
    struct Scripted {
        routes: HashMap<(Method, String), Vec<Result<ProbeReply, ProbeError>>>,
        log: Mutex<Vec<(Method, String)>>,
    }

    impl Scripted {
        fn new() -> Self {
            Scripted { routes: HashMap::new(), log: Mutex::new(Vec::new()) }
        }

        fn on(mut self, m: Method, url: &str, status: u16, location: Option<&str>) -> Self {
            let reply = Ok(ProbeReply { status, location: location.map(str::to_string) });
            self.routes.entry((m, url.to_string())).or_default().push(reply);
            self
        }
    }

    impl HttpProbe for Scripted {
        fn request(&self, method: Method, url: &str) -> Result<ProbeReply, ProbeError> {
            self.log.lock().unwrap().push((method, url.to_string()));
            match self.routes.get(&(method, url.to_string())) {
                Some(v) => v[0].clone(),
                None => Err(ProbeError::Transport("refused".into())),
            }
        }
    }

    fn checker(probe: Arc<dyn HttpProbe>) -> LinkChecker {
        let cfg = LinkCheckConfig { backoff: vec![Duration::ZERO], host_spacing: Duration::ZERO, ..Default::default() };
        LinkChecker::new(probe, cfg, Arc::new(FixedClock::at("2025-12-01T00:00:00Z")))
    }

    #[test]
    fn head_405_falls_back_to_get() {
        let p = Arc::new(
            Scripted::new()
                .on(Method::Head, "https://a.org/x", 405, None)
                .on(Method::Get, "https://a.org/x", 200, None),
        );
        let st = checker(p.clone()).check("https://a.org/x");
        assert_eq!((st.outcome, st.http_status, st.attempts), (LinkOutcome::Valid, Some(200), 1));
        assert_eq!(p.log.lock().unwrap().len(), 2);
    }

    #[test]
    fn relative_redirects_resolve() {
        let p = Arc::new(
            Scripted::new()
                .on(Method::Head, "https://a.org/x", 302, Some("/y"))
                .on(Method::Head, "https://a.org/y", 404, None),
        );
        let st = checker(p).check("https://a.org/x");
        assert_eq!((st.outcome, st.http_status), (LinkOutcome::Broken, Some(404)));
    }

    #[test]
    fn redirect_limit_is_five_hops() {
        let mut s = Scripted::new();
        for i in 0..5 {
            s = s.on(Method::Head, &format!("https://a.org/{i}"), 301, Some(&format!("/{}", i + 1)));
        }
        let ok = Arc::new(s.on(Method::Head, "https://a.org/5", 200, None));
        assert_eq!(checker(ok).check("https://a.org/0").outcome, LinkOutcome::Valid);

        let mut s = Scripted::new();
        for i in 0..6 {
            s = s.on(Method::Head, &format!("https://a.org/{i}"), 301, Some(&format!("/{}", i + 1)));
        }
        let st = checker(Arc::new(s.on(Method::Head, "https://a.org/6", 200, None))).check("https://a.org/0");
        assert_eq!((st.outcome, st.http_status, st.attempts), (LinkOutcome::Unreachable, None, 1));
    }

    #[test]
    fn transport_failures_retry_with_backoff() {
        let pauses = Arc::new(Mutex::new(Vec::new()));
        let rec = pauses.clone();
        let cfg = LinkCheckConfig { host_spacing: Duration::ZERO, ..Default::default() };
        let c = LinkChecker::new(Arc::new(Scripted::new()), cfg, Arc::new(FixedClock::at("2025-12-01T00:00:00Z")))
            .with_sleeper(move |d| rec.lock().unwrap().push(d));
        let st = c.check("https://down.org/");
        assert_eq!((st.outcome, st.attempts), (LinkOutcome::Unreachable, 3));
        assert_eq!(*pauses.lock().unwrap(), vec![Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn offline_touches_nothing() {
        let probe = Arc::new(RecordingProbe::default());
        let c = LinkChecker::new(probe.clone(), LinkCheckConfig::offline(), Arc::new(FixedClock::at("t")));
        let st = c.check_many(&["https://a.org/".into(), "https://b.org/".into()]);
        assert!(st.iter().all(|s| s.outcome == LinkOutcome::SkippedOffline && s.attempts == 0));
        assert!(probe.calls().is_empty());
    }

    #[test]
    fn check_many_keeps_order() {
        let p = Arc::new(
            Scripted::new()
                .on(Method::Head, "https://a.org/1", 200, None)
                .on(Method::Head, "https://b.org/2", 404, None)
                .on(Method::Head, "https://c.org/3", 500, None),
        );
        let urls: Vec<String> = ["https://a.org/1", "https://b.org/2", "https://c.org/3"].map(String::from).into();
        let got: Vec<_> = checker(p).check_many(&urls).into_iter().map(|s| (s.url, s.http_status)).collect();
        assert_eq!(
            got,
            vec![
                ("https://a.org/1".to_string(), Some(200)),
                ("https://b.org/2".to_string(), Some(404)),
                ("https://c.org/3".to_string(), Some(500)),
            ]
        );
    }

    #[test]
    fn same_host_checks_are_spaced() {
        let p = Arc::new(
            Scripted::new().on(Method::Head, "https://a.org/1", 200, None).on(Method::Head, "https://a.org/2", 200, None),
        );
        let cfg = LinkCheckConfig { host_spacing: Duration::from_millis(150), ..Default::default() };
        let c = LinkChecker::new(p, cfg, Arc::new(FixedClock::at("t")));
        let started = Instant::now();
        c.check_many(&["https://a.org/1".into(), "https://a.org/2".into()]);
        assert!(started.elapsed() >= Duration::from_millis(150));
    }
}
