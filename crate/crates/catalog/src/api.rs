//! HTTP API as a pure function from request to response.
//!
//! The network adapter in [`crate::http`] only moves bytes; everything the
//! portal relies on (routes, status codes, body shapes) lives here.

use std::collections::BTreeSet;
use std::sync::Arc;

use oc_core::json::to_canonical_bytes;
use oc_core::pipeline::Decision;
use oc_core::provenance::ProvenanceEvent;
use oc_core::query::{Aggregation, Facet, FacetFilter, QuerySpec, SearchPage};
use oc_core::schema::SchemaError;
use oc_core::{Catalog, CatalogEntry, EntryState, PersistentId};
use serde_json::{json, Value};

use crate::accounts::Account;
use crate::store::{EntryFilter, StoreError};
use crate::workflow::{draft_from_json, CatalogService, WorkflowError};

pub const DEFAULT_SEARCH_LIMIT: usize = 10;
pub const MAX_SEARCH_LIMIT: usize = 100;
pub const DEFAULT_LIST_LIMIT: usize = 50;
pub const MAX_LIST_LIMIT: usize = 500;
const MAX_BODY: usize = 1 << 20;
/// How stale the in-memory view may get relative to other writers.
pub const SYNC_INTERVAL: std::time::Duration = std::time::Duration::from_secs(1);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApiRequest {
    pub method: String,
    pub path: String,
    /// Raw query string without the `?`.
    pub query: String,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl ApiRequest {
    fn new(method: &str, target: &str) -> Self {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        ApiRequest { method: method.into(), path: path.into(), query: query.into(), ..Default::default() }
    }

    pub fn get(target: &str) -> Self {
        Self::new("GET", target)
    }

    pub fn post(target: &str, body: impl Into<Vec<u8>>) -> Self {
        ApiRequest { body: body.into(), ..Self::new("POST", target) }
    }

    pub fn options(target: &str) -> Self {
        Self::new("OPTIONS", target)
    }

    pub fn with_header(mut self, name: &str, value: &str) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }

    pub fn bearer(self, token: &str) -> Self {
        self.with_header("authorization", &format!("Bearer {token}"))
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }

    fn params(&self) -> Vec<(String, String)> {
        url::form_urlencoded::parse(self.query.as_bytes()).into_owned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl ApiResponse {
    fn json(status: u16, value: &Value) -> Self {
        ApiResponse {
            status,
            headers: vec![("content-type".into(), "application/json".into())],
            body: to_canonical_bytes(value),
        }
    }

    pub fn body_json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: u16,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    pub fn new(status: u16, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), field: None }
    }

    fn on(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }

    fn unknown_id(id: &str) -> Self {
        ApiError::new(404, "unknown_id", format!("no entry with id `{id}`"))
    }

    fn bad_param(name: &str, message: impl Into<String>) -> Self {
        ApiError::new(400, "invalid_parameter", message).on(name)
    }

    pub fn to_response(&self) -> ApiResponse {
        let mut body = json!({ "code": self.code, "message": self.message });
        if let Some(f) = &self.field {
            body["field"] = Value::String(f.clone());
        }
        ApiResponse::json(self.status, &body)
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let msg = e.to_string();
        match e {
            WorkflowError::Unauthenticated => ApiError::new(401, "unauthenticated", msg),
            WorkflowError::Forbidden => ApiError::new(403, "forbidden", msg),
            WorkflowError::Schema(s) => schema_error(s),
            WorkflowError::UnknownId(id) => ApiError::unknown_id(&id),
            WorkflowError::NotPending(_) => ApiError::new(409, "not_pending", msg),
            WorkflowError::IllegalTransition { .. } => ApiError::new(409, "illegal_transition", msg),
            WorkflowError::BlockedByErrors(report) => {
                let codes: Vec<&str> = report.errors().map(|f| f.code.as_str()).collect();
                ApiError::new(409, "blocked_by_errors", format!("{msg}: {}", codes.join(", ")))
            }
            WorkflowError::Review(_) => ApiError::new(409, "review_refused", msg),
            WorkflowError::Store(StoreError::Conflict) => ApiError::new(409, "write_conflict", msg),
            WorkflowError::Store(_) | WorkflowError::Accounts(_) => ApiError::new(503, "store_unavailable", msg),
        }
    }
}

fn schema_error(e: SchemaError) -> ApiError {
    let msg = e.to_string();
    match e {
        SchemaError::MissingRequiredKey(k) => ApiError::new(400, "schema_invalid", msg).on(k),
        SchemaError::TypeMismatch { key, .. } => ApiError::new(400, "schema_invalid", msg).on(key),
        SchemaError::MalformedJson(_) => ApiError::new(400, "malformed_json", msg),
        _ => ApiError::new(400, "schema_invalid", msg),
    }
}

/// Body of `/search` and of the `search_catalog` tool.
pub fn search_body(page: &SearchPage) -> Value {
    let items: Vec<Value> = page
        .hits
        .iter()
        .map(|h| json!({ "id": h.id, "score": h.score, "title": h.title, "catalog": h.catalog.as_str() }))
        .collect();
    json!({ "items": items, "total": page.total, "offset": page.offset, "limit": page.limit })
}

/// Body of `/stats` and of the `aggregate_stats` tool.
pub fn stats_body(agg: &Aggregation) -> Value {
    json!({ "dimension": agg.dimension, "counts": agg.counts, "total": agg.total })
}

pub fn list_body(items: Vec<Value>, total: usize, offset: usize, limit: usize) -> Value {
    json!({ "items": items, "total": total, "offset": offset, "limit": limit })
}

/// Adds `term` to the filter for `facet`; blank terms are ignored.
pub fn add_facet_term(filter: &mut FacetFilter, facet: Facet, term: &str) {
    let term = term.trim();
    if !term.is_empty() {
        filter.entry(facet).or_default().insert(term.to_string());
    }
}

pub struct Api {
    svc: Arc<CatalogService>,
    cors_origin: Option<String>,
}

impl Api {
    pub fn new(svc: Arc<CatalogService>) -> Self {
        Api { svc, cors_origin: None }
    }

    pub fn with_cors_origin(mut self, origin: Option<String>) -> Self {
        self.cors_origin = origin;
        self
    }

    pub fn service(&self) -> &Arc<CatalogService> {
        &self.svc
    }

    pub fn handle(&self, req: &ApiRequest) -> ApiResponse {
        if req.method != "OPTIONS" {
            if let Err(e) = self.svc.sync_if_stale(SYNC_INTERVAL) {
                log::warn!("store sync failed: {e}");
            }
        }
        let mut resp = if req.method == "OPTIONS" {
            ApiResponse { status: 204, headers: Vec::new(), body: Vec::new() }
        } else {
            match self.route(req) {
                Ok((status, body)) => ApiResponse::json(status, &body),
                Err(e) => e.to_response(),
            }
        };
        if let Some(origin) = &self.cors_origin {
            resp.headers.push(("access-control-allow-origin".into(), origin.clone()));
            resp.headers.push(("vary".into(), "Origin".into()));
            if req.method == "OPTIONS" {
                resp.headers.push(("access-control-allow-methods".into(), "GET, POST, OPTIONS".into()));
                resp.headers.push(("access-control-allow-headers".into(), "authorization, content-type".into()));
                resp.headers.push(("access-control-max-age".into(), "600".into()));
            }
        }
        resp
    }

    fn route(&self, req: &ApiRequest) -> Result<(u16, Value), ApiError> {
        let path = req.path.trim_end_matches('/');
        let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
        let method = req.method.as_str();
        let Some(rest) = segments.strip_prefix(&["api", "v1"]) else {
            return Err(ApiError::new(404, "not_found", format!("no route for {path}")));
        };
        match (method, rest) {
            ("GET", ["health"]) => Ok((200, self.health())),
            ("GET", ["entries"]) => self.list_entries(req).map(ok),
            ("GET", ["entries", id]) => self.get_entry(req, id).map(ok),
            ("GET", ["search"]) => self.search(req).map(ok),
            ("GET", ["stats"]) => self.stats(req).map(ok),
            ("GET", ["provenance", id]) => self.provenance(req, id).map(ok),
            ("POST", ["submissions"]) => self.submit(req).map(|v| (201, v)),
            ("POST", ["submissions", id, "review"]) => self.review(req, id).map(ok),
            (_, ["health" | "entries" | "search" | "stats" | "submissions"])
            | (_, ["entries" | "provenance", _])
            | (_, ["submissions", _, "review"]) => {
                Err(ApiError::new(405, "method_not_allowed", format!("{method} not allowed on {path}")))
            }
            _ => Err(ApiError::new(404, "not_found", format!("no route for {path}"))),
        }
    }

    fn caller(&self, req: &ApiRequest) -> Option<Account> {
        let auth = req.header("authorization")?;
        let token = auth.strip_prefix("Bearer ").or_else(|| auth.strip_prefix("bearer "))?;
        self.svc.authenticate(token.trim())
    }

    fn require_curator(&self, req: &ApiRequest) -> Result<Account, ApiError> {
        match self.caller(req) {
            None => Err(ApiError::new(401, "unauthenticated", "curator credentials required")),
            Some(a) if !a.is_curator() => Err(ApiError::new(403, "forbidden", "curator role required")),
            Some(a) => Ok(a),
        }
    }

    fn health(&self) -> Value {
        json!({
            "status": "ok",
            "published": self.svc.index().len(),
            "offline": self.svc.offline(),
        })
    }

    fn list_entries(&self, req: &ApiRequest) -> Result<Value, ApiError> {
        let mut filter = EntryFilter::published();
        let mut offset = 0;
        let mut limit = DEFAULT_LIST_LIMIT;
        for (k, v) in req.params() {
            match k.as_str() {
                "catalog" if v.is_empty() => {}
                "catalog" => {
                    let c = Catalog::parse(&v).ok_or_else(|| ApiError::bad_param("catalog", format!("unknown catalog `{v}`")))?;
                    filter.catalog = Some(c);
                }
                "state" if v.is_empty() => {}
                "state" => {
                    let s = EntryState::parse(&v).ok_or_else(|| ApiError::bad_param("state", format!("unknown state `{v}`")))?;
                    filter.state = Some(s);
                }
                "offset" => offset = parse_usize("offset", &v)?,
                "limit" => limit = parse_usize("limit", &v)?.min(MAX_LIST_LIMIT),
                other => return Err(unknown_param(other)),
            }
        }
        if filter.state != Some(EntryState::Published) {
            self.require_curator(req)?;
        }
        let page = self.svc.store().list_entries(&filter, offset, limit);
        let items = page.items.iter().map(CatalogEntry::to_value).collect();
        Ok(list_body(items, page.total, offset, limit))
    }

    /// Published entries are public; others are visible to curators and
    /// to their submitter.
    fn visible(&self, req: &ApiRequest, id: &str) -> Result<PersistentId, ApiError> {
        let pid = PersistentId::parse(id).ok_or_else(|| ApiError::unknown_id(id))?;
        let m = self.svc.store().materialize(&pid).map_err(|_| ApiError::unknown_id(id))?;
        if m.entry.state == EntryState::Published {
            return Ok(pid);
        }
        match self.caller(req) {
            Some(a) if a.is_curator() || m.submitter.as_deref() == Some(a.id.as_str()) => Ok(pid),
            _ => Err(ApiError::unknown_id(id)),
        }
    }

    fn get_entry(&self, req: &ApiRequest, id: &str) -> Result<Value, ApiError> {
        let pid = self.visible(req, id)?;
        let entry = self.svc.store().entry(&pid).map_err(|_| ApiError::unknown_id(id))?;
        Ok(entry.to_value())
    }

    fn provenance(&self, req: &ApiRequest, id: &str) -> Result<Value, ApiError> {
        let pid = self.visible(req, id)?;
        let events = self.svc.store().events(&pid).map_err(|_| ApiError::unknown_id(id))?;
        let n = events.len();
        let items = events.iter().map(event_value).collect();
        Ok(list_body(items, n, 0, n))
    }

    fn search(&self, req: &ApiRequest) -> Result<Value, ApiError> {
        let mut spec = QuerySpec { limit: DEFAULT_SEARCH_LIMIT, ..QuerySpec::default() };
        for (k, v) in req.params() {
            match k.as_str() {
                "q" => spec.text = v,
                "offset" => spec.offset = parse_usize("offset", &v)?,
                "limit" => spec.limit = parse_usize("limit", &v)?.min(MAX_SEARCH_LIMIT),
                other => match Facet::parse(other) {
                    Some(f) => add_facet_term(&mut spec.facets, f, &v),
                    None => return Err(unknown_param(other)),
                },
            }
        }
        Ok(search_body(&self.svc.search(&spec)))
    }

    fn stats(&self, req: &ApiRequest) -> Result<Value, ApiError> {
        let mut dimension = None;
        let mut filters = FacetFilter::new();
        for (k, v) in req.params() {
            match k.as_str() {
                "dimension" => dimension = Some(v),
                other => match Facet::parse(other) {
                    Some(f) => add_facet_term(&mut filters, f, &v),
                    None => return Err(unknown_param(other)),
                },
            }
        }
        let dimension = dimension.ok_or_else(|| ApiError::bad_param("dimension", "dimension is required"))?;
        let agg = self
            .svc
            .aggregate(&dimension, &filters)
            .map_err(|e| ApiError::new(400, "unknown_dimension", e.to_string()).on("dimension"))?;
        Ok(stats_body(&agg))
    }

    fn submit(&self, req: &ApiRequest) -> Result<Value, ApiError> {
        let who = self.caller(req).ok_or_else(|| ApiError::new(401, "unauthenticated", "credentials required"))?;
        let body = json_body(req)?;
        let draft = draft_from_json(&body, &who.id).map_err(schema_error)?;
        let sub = self.svc.submit(draft, Some(&who))?;
        Ok(serde_json::to_value(&sub).unwrap_or(Value::Null))
    }

    fn review(&self, req: &ApiRequest, id: &str) -> Result<Value, ApiError> {
        let who = self.caller(req);
        if who.is_none() {
            return Err(ApiError::new(401, "unauthenticated", "curator credentials required"));
        }
        let body = json_body(req)?;
        let decision_text = body.get("decision").and_then(Value::as_str).unwrap_or_default();
        let decision = Decision::parse(decision_text).ok_or_else(|| {
            ApiError::new(400, "invalid_parameter", "decision must be approve, reject or request_changes").on("decision")
        })?;
        let rationale = body.get("rationale").and_then(Value::as_str).unwrap_or_default();
        let state = self.svc.review(id, decision, rationale, who.as_ref())?;
        Ok(json!({ "id": id, "state": state.as_str() }))
    }
}

fn ok(v: Value) -> (u16, Value) {
    (200, v)
}

fn unknown_param(name: &str) -> ApiError {
    ApiError::new(400, "unknown_parameter", format!("unknown query parameter `{name}`")).on(name)
}

fn parse_usize(name: &str, v: &str) -> Result<usize, ApiError> {
    v.trim().parse().map_err(|_| ApiError::bad_param(name, format!("`{v}` is not a non-negative integer")))
}

fn json_body(req: &ApiRequest) -> Result<Value, ApiError> {
    if req.body.len() > MAX_BODY {
        return Err(ApiError::new(413, "body_too_large", "request body exceeds 1 MiB"));
    }
    serde_json::from_slice(&req.body).map_err(|e| ApiError::new(400, "malformed_json", e.to_string()))
}

fn event_value(ev: &ProvenanceEvent) -> Value {
    serde_json::to_value(ev).unwrap_or(Value::Null)
}

/// Facet keys accepted as query parameters.
pub fn facet_keys() -> BTreeSet<&'static str> {
    [Facet::Catalog, Facet::Modality, Facet::Task, Facet::Phase, Facet::OerFormat, Facet::Year, Facet::License]
        .into_iter()
        .map(Facet::key)
        .collect()
}
