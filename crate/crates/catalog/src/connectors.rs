//! Paginated clients for the external metadata sources plus the fixture
//! directory reader.
//!
//! Three network shapes are supported: a code host repository search
//! (`/search/repositories`, page numbers), an open-data record search
//! (`/api/records`, page numbers with a `links.next` marker) and a model hub
//! listing (`/api/models`, `Link: rel="next"` headers).

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use oc_core::connectors::{build_query, Cursor, RawRecord, SourceKind};
use oc_core::schema::SourceRef;
use oc_core::urls::is_absolute_url;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::clock::Clock;

pub const MAX_PAGE_SIZE: u32 = 100;

#[derive(Debug, Error)]
pub enum ConnectorError {
    #[error("network unreachable: {0}")]
    NetworkUnreachable(String),
    #[error("source rejected the credentials (HTTP {0})")]
    AuthRejected(u16),
    #[error("rate limited, retry after {retry_after} s")]
    RateLimited { retry_after: u64 },
    #[error("offline mode forbids contacting {0}")]
    OfflineViolation(String),
    #[error("unexpected HTTP status {0}")]
    HttpStatus(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("invalid source config: {0}")]
    InvalidConfig(String),
    #[error("cursor `{0}` does not belong to this source")]
    BadCursor(String),
    #[error("fixture read failed: {0}")]
    Io(#[from] io::Error),
}

/// Keyword groups combined into a search query when `query` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Keywords {
    pub domain: Vec<String>,
    pub method: Vec<String>,
    pub access: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub name: String,
    pub kind: SourceKind,
    /// Directory for fixture sources, API root otherwise.
    pub base_url: String,
    #[serde(default, skip_serializing)]
    pub auth_token: Option<String>,
    #[serde(default)]
    pub query: String,
    #[serde(default)]
    pub keywords: Option<Keywords>,
    pub page_size: u32,
    /// Payload shape reported for fixture records, so one profile can map
    /// both live and recorded data. Defaults to `fixture`.
    #[serde(default)]
    pub record_kind: Option<SourceKind>,
}

impl SourceConfig {
    /// Reads a JSON source config. A relative fixture directory is resolved
    /// against the config file's directory; a missing token is looked up in
    /// `OC_SOURCE_TOKEN_<NAME>`.
    pub fn load(path: &Path) -> Result<Self, ConnectorError> {
        let bytes = fs::read(path)?;
        let mut cfg: SourceConfig =
            serde_json::from_slice(&bytes).map_err(|e| ConnectorError::InvalidConfig(e.to_string()))?;
        if cfg.kind == SourceKind::Fixture && Path::new(&cfg.base_url).is_relative() {
            let dir = path.parent().unwrap_or(Path::new("."));
            cfg.base_url = dir.join(&cfg.base_url).display().to_string();
        }
        if cfg.auth_token.is_none() {
            cfg.auth_token = std::env::var(token_env_var(&cfg.name)).ok().filter(|t| !t.is_empty());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConnectorError> {
        let bad = |m: String| Err(ConnectorError::InvalidConfig(m));
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        if self.page_size == 0 || self.page_size > MAX_PAGE_SIZE {
            return bad(format!("page_size must be in 1..={MAX_PAGE_SIZE}, got {}", self.page_size));
        }
        match self.kind {
            SourceKind::Fixture => {
                if is_absolute_url(&self.base_url) {
                    return bad("fixture sources need a local directory, not a URL".into());
                }
            }
            _ => {
                let http = self.base_url.starts_with("http://") || self.base_url.starts_with("https://");
                if !http || url::Url::parse(&self.base_url).is_err() {
                    return bad(format!("`{}` is not an absolute http(s) URL", self.base_url));
                }
            }
        }
        Ok(())
    }

    pub fn effective_query(&self) -> Result<String, ConnectorError> {
        if !self.query.trim().is_empty() {
            return Ok(self.query.clone());
        }
        match &self.keywords {
            Some(k) => {
                build_query(&refs(&k.domain), &refs(&k.method), &refs(&k.access))
                    .map_err(|e| ConnectorError::InvalidConfig(e.to_string()))
            }
            None => Ok(String::new()),
        }
    }

    pub fn fixture_dir(&self) -> PathBuf {
        PathBuf::from(&self.base_url)
    }
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// `OC_SOURCE_TOKEN_` followed by the upper-cased name, non-alphanumerics
/// replaced by `_`.
pub fn token_env_var(name: &str) -> String {
    let suffix: String =
        name.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect();
    format!("OC_SOURCE_TOKEN_{suffix}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpRequest {
    pub url: String,
    pub headers: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl HttpResponse {
    pub fn ok_json(body: impl Into<Vec<u8>>) -> Self {
        HttpResponse { status: 200, headers: vec![("content-type".into(), "application/json".into())], body: body.into() }
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// GET-only HTTP client; shared between connectors.
pub trait HttpTransport: Send + Sync {
    fn get(&self, req: &HttpRequest) -> Result<HttpResponse, TransportError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .user_agent(concat!("oc-harvest/", env!("CARGO_PKG_VERSION")))
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, req: &HttpRequest) -> Result<HttpResponse, TransportError> {
        let mut builder = self.agent.get(&req.url);
        for (k, v) in &req.headers {
            builder = builder.header(k, v);
        }
        let mut resp = builder.call().map_err(|e| TransportError(e.to_string()))?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| v.to_str().ok().map(|v| (k.as_str().to_string(), v.to_string())))
            .collect();
        let body = resp
            .body_mut()
            .with_config()
            .limit(32 * 1024 * 1024)
            .read_to_vec()
            .map_err(|e| TransportError(e.to_string()))?;
        Ok(HttpResponse { status, headers, body })
    }
}

/// Records every request and answers none of them.
#[derive(Debug, Default)]
pub struct RecordingTransport {
    requests: Mutex<Vec<HttpRequest>>,
}

impl RecordingTransport {
    pub fn requests(&self) -> Vec<HttpRequest> {
        self.requests.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl HttpTransport for RecordingTransport {
    fn get(&self, req: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.requests.lock().unwrap_or_else(|p| p.into_inner()).push(req.clone());
        Err(TransportError("recording transport has no network".into()))
    }
}

/// Serves recorded responses by exact URL.
#[derive(Debug, Default)]
pub struct ReplayTransport {
    routes: Vec<(String, HttpResponse)>,
    requests: Mutex<Vec<HttpRequest>>,
}

impl ReplayTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn route(mut self, url: impl Into<String>, resp: HttpResponse) -> Self {
        self.routes.push((url.into(), resp));
        self
    }

    pub fn requests(&self) -> Vec<HttpRequest> {
        self.requests.lock().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

impl HttpTransport for ReplayTransport {
    fn get(&self, req: &HttpRequest) -> Result<HttpResponse, TransportError> {
        self.requests.lock().unwrap_or_else(|p| p.into_inner()).push(req.clone());
        self.routes
            .iter()
            .find(|(u, _)| *u == req.url)
            .map(|(_, r)| r.clone())
            .ok_or_else(|| TransportError(format!("no recording for {}", req.url)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Page {
    pub records: Vec<RawRecord>,
    pub next: Cursor,
}

pub struct Connector {
    config: SourceConfig,
    transport: Arc<dyn HttpTransport>,
    offline: bool,
    clock: Arc<dyn Clock>,
}

impl Connector {
    pub fn new(
        config: SourceConfig,
        transport: Arc<dyn HttpTransport>,
        offline: bool,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, ConnectorError> {
        config.validate()?;
        Ok(Connector { config, transport, offline, clock })
    }

    pub fn config(&self) -> &SourceConfig {
        &self.config
    }

    /// Fetches at most `page_size` records starting at `cursor`.
    pub fn fetch_page(&self, cursor: &Cursor) -> Result<Page, ConnectorError> {
        if cursor.is_end() {
            return Ok(Page { records: Vec::new(), next: Cursor::End });
        }
        if self.config.kind == SourceKind::Fixture {
            return self.fixture_page(cursor);
        }
        if self.offline {
            return Err(ConnectorError::OfflineViolation(self.config.base_url.clone()));
        }
        match self.config.kind {
            SourceKind::CodeHost => self.code_host_page(cursor),
            SourceKind::OpenData => self.open_data_page(cursor),
            SourceKind::ModelHub => self.model_hub_page(cursor),
            SourceKind::Fixture => unreachable!("handled above"),
        }
    }

    /// Follows cursors until the source is exhausted.
    pub fn fetch_all(&self) -> Result<Vec<RawRecord>, ConnectorError> {
        let mut out = Vec::new();
        let mut cursor = Cursor::Begin;
        while !cursor.is_end() {
            let page = self.fetch_page(&cursor)?;
            out.extend(page.records);
            cursor = page.next;
        }
        Ok(out)
    }

    fn record(&self, kind: SourceKind, record_id: String, payload: Value) -> RawRecord {
        RawRecord {
            kind,
            source: SourceRef { repository: self.config.name.clone(), record_id },
            payload,
            fetched_at: self.clock.now(),
        }
    }

    fn fixture_page(&self, cursor: &Cursor) -> Result<Page, ConnectorError> {
        let dir = self.config.fixture_dir();
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        let start = page_number(cursor, 0)?;
        let size = self.config.page_size as usize;
        let kind = self.config.record_kind.unwrap_or(SourceKind::Fixture);
        let mut records = Vec::new();
        for path in files.iter().skip(start).take(size) {
            let bytes = fs::read(path)?;
            let payload: Value = serde_json::from_slice(&bytes)
                .map_err(|e| ConnectorError::Malformed(format!("{}: {e}", path.display())))?;
            let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            records.push(self.record(kind, id, payload));
        }
        let end = start + records.len();
        let next = if end < files.len() { Cursor::Token(end.to_string()) } else { Cursor::End };
        Ok(Page { records, next })
    }

    fn headers(&self, accept: &str) -> Vec<(String, String)> {
        let mut h = vec![("accept".to_string(), accept.to_string())];
        if let Some(t) = &self.config.auth_token {
            h.push(("authorization".into(), format!("Bearer {t}")));
        }
        h
    }

    fn call(&self, url: String, accept: &str) -> Result<HttpResponse, ConnectorError> {
        let req = HttpRequest { url, headers: self.headers(accept) };
        let resp = self.transport.get(&req).map_err(|e| ConnectorError::NetworkUnreachable(e.0))?;
        match resp.status {
            200..=299 => Ok(resp),
            401 | 403 if resp.header("x-ratelimit-remaining") == Some("0") => Err(rate_limited(&resp)),
            401 | 403 => Err(ConnectorError::AuthRejected(resp.status)),
            429 => Err(rate_limited(&resp)),
            s => Err(ConnectorError::HttpStatus(s)),
        }
    }

    fn base(&self) -> &str {
        self.config.base_url.trim_end_matches('/')
    }

    /// URL of the first page of a code host search; later pages differ only
    /// in `page`.
    pub fn code_host_url(&self, page: usize) -> Result<String, ConnectorError> {
        let q = self.config.effective_query()?;
        Ok(format!(
            "{}/search/repositories?{}",
            self.base(),
            encode(&[("q", &q), ("per_page", &self.config.page_size.to_string()), ("page", &page.to_string())])
        ))
    }

    fn code_host_page(&self, cursor: &Cursor) -> Result<Page, ConnectorError> {
        let page = page_number(cursor, 1)?;
        let resp = self.call(self.code_host_url(page)?, "application/vnd.github+json")?;
        let body = parse_body(&resp)?;
        let items = array_at(&body, "/items")?;
        let total = body.get("total_count").and_then(Value::as_u64).unwrap_or(0) as usize;
        let records: Vec<RawRecord> = items
            .iter()
            .map(|it| {
                let id = str_field(it, &["full_name", "id"]);
                self.record(SourceKind::CodeHost, id, it.clone())
            })
            .collect();
        let more = records.len() == self.config.page_size as usize && page * (self.config.page_size as usize) < total;
        let next = if more { Cursor::Token((page + 1).to_string()) } else { Cursor::End };
        Ok(Page { records, next })
    }

    pub fn open_data_url(&self, page: usize) -> Result<String, ConnectorError> {
        let q = self.config.effective_query()?;
        Ok(format!(
            "{}/api/records?{}",
            self.base(),
            encode(&[("q", &q), ("size", &self.config.page_size.to_string()), ("page", &page.to_string())])
        ))
    }

    fn open_data_page(&self, cursor: &Cursor) -> Result<Page, ConnectorError> {
        let page = page_number(cursor, 1)?;
        let resp = self.call(self.open_data_url(page)?, "application/json")?;
        let body = parse_body(&resp)?;
        let hits = array_at(&body, "/hits/hits")?;
        let records: Vec<RawRecord> = hits
            .iter()
            .map(|h| self.record(SourceKind::OpenData, str_field(h, &["id", "doi"]), h.clone()))
            .collect();
        let has_next = body.pointer("/links/next").is_some_and(|v| !v.is_null());
        let next = if has_next && !records.is_empty() { Cursor::Token((page + 1).to_string()) } else { Cursor::End };
        Ok(Page { records, next })
    }

    pub fn model_hub_url(&self) -> Result<String, ConnectorError> {
        let q = self.config.effective_query()?;
        Ok(format!(
            "{}/api/models?{}",
            self.base(),
            encode(&[("search", &q), ("limit", &self.config.page_size.to_string()), ("full", "true")])
        ))
    }

    fn model_hub_page(&self, cursor: &Cursor) -> Result<Page, ConnectorError> {
        let url = match cursor {
            Cursor::Begin => self.model_hub_url()?,
            Cursor::Token(t) if t.starts_with(self.base()) => t.clone(),
            Cursor::Token(t) => return Err(ConnectorError::BadCursor(t.clone())),
            Cursor::End => unreachable!("handled by fetch_page"),
        };
        let resp = self.call(url, "application/json")?;
        let body = parse_body(&resp)?;
        let items = body.as_array().ok_or_else(|| ConnectorError::Malformed("expected a JSON array".into()))?;
        let records = items
            .iter()
            .map(|m| {
                let id = str_field(m, &["id", "modelId"]);
                let mut payload = m.clone();
                // Listings carry no page URL; the model page lives at <base>/<id>.
                if let Value::Object(obj) = &mut payload {
                    obj.entry("url").or_insert_with(|| Value::String(format!("{}/{id}", self.base())));
                }
                self.record(SourceKind::ModelHub, id, payload)
            })
            .collect();
        let next = match resp.header("link").and_then(next_link) {
            Some(u) => Cursor::Token(u),
            None => Cursor::End,
        };
        Ok(Page { records, next })
    }
}

fn page_number(cursor: &Cursor, first: usize) -> Result<usize, ConnectorError> {
    match cursor {
        Cursor::Begin => Ok(first),
        Cursor::Token(t) => t.parse().map_err(|_| ConnectorError::BadCursor(t.clone())),
        Cursor::End => Ok(usize::MAX),
    }
}

fn encode(pairs: &[(&str, &str)]) -> String {
    let mut s = url::form_urlencoded::Serializer::new(String::new());
    for (k, v) in pairs {
        s.append_pair(k, v);
    }
    s.finish()
}

fn rate_limited(resp: &HttpResponse) -> ConnectorError {
    let retry_after = resp.header("retry-after").and_then(|v| v.trim().parse().ok()).unwrap_or(60);
    ConnectorError::RateLimited { retry_after }
}

fn parse_body(resp: &HttpResponse) -> Result<Value, ConnectorError> {
    serde_json::from_slice(&resp.body).map_err(|e| ConnectorError::Malformed(e.to_string()))
}

fn array_at<'a>(body: &'a Value, pointer: &str) -> Result<&'a Vec<Value>, ConnectorError> {
    body.pointer(pointer).and_then(Value::as_array).ok_or_else(|| ConnectorError::Malformed(format!("no array at {pointer}")))
}

fn str_field(v: &Value, keys: &[&str]) -> String {
    keys.iter()
        .find_map(|k| match v.get(*k) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(Value::Number(n)) => Some(n.to_string()),
            _ => None,
        })
        .unwrap_or_default()
}

/// Target of the `rel="next"` entry in an RFC 8288 `Link` header.
fn next_link(header: &str) -> Option<String> {
    header.split(',').find_map(|part| {
        let mut pieces = part.split(';');
        let target = pieces.next()?.trim();
        let is_next = pieces.any(|p| {
            let p = p.trim();
            p == "rel=\"next\"" || p == "rel=next"
        });
        is_next.then(|| target.trim_start_matches('<').trim_end_matches('>').to_string())
    })
}
