//! MCP server: JSON-RPC 2.0 over a byte stream, tools only.
//!
//! Requests are handled strictly in arrival order. Reads go through the
//! same service calls as the HTTP API so the two surfaces stay in step.

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use oc_core::json::to_canonical_bytes;
use oc_core::query::{Facet, FacetFilter, QuerySpec};
use oc_core::{EntryState, PersistentId};
use serde_json::{json, Map, Value};

use crate::api::{add_facet_term, search_body, stats_body, MAX_SEARCH_LIMIT};
use crate::config::Framing;
use crate::workflow::CatalogService;

pub const SERVER_NAME: &str = "oc-catalog";
pub const PROTOCOL_VERSIONS: [&str; 3] = ["2025-06-18", "2025-03-26", "2024-11-05"];
pub const TOOL_NAMES: [&str; 4] = ["search_catalog", "get_entry", "aggregate_stats", "validate_links"];

pub const PARSE_ERROR: i64 = -32700;
pub const INVALID_REQUEST: i64 = -32600;
pub const METHOD_NOT_FOUND: i64 = -32601;
pub const INVALID_PARAMS: i64 = -32602;

const MAX_LINK_IDS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RpcError {
    pub code: i64,
    pub message: String,
}

impl RpcError {
    fn new(code: i64, message: impl Into<String>) -> Self {
        RpcError { code, message: message.into() }
    }

    fn params(message: impl Into<String>) -> Self {
        Self::new(INVALID_PARAMS, message)
    }
}

fn error_response(id: Value, err: RpcError) -> Value {
    json!({ "jsonrpc": "2.0", "id": id, "error": { "code": err.code, "message": err.message } })
}

fn result_response(id: Value, result: Value) -> Value {
    json!({ "jsonrpc": "2.0", "id": id, "result": result })
}

fn facet_schema() -> Value {
    json!({
        "oneOf": [
            { "type": "string" },
            { "type": "array", "items": { "type": "string" } }
        ]
    })
}

fn facet_properties(props: &mut Map<String, Value>) {
    for f in Facet::ALL {
        props.insert(f.key().into(), facet_schema());
    }
}

/// The fixed tool registry, in `tools/list` order.
pub fn tool_descriptors() -> Vec<Value> {
    let mut search_props = Map::new();
    search_props.insert("query".into(), json!({ "type": "string", "description": "Keyword query; empty lists everything." }));
    facet_properties(&mut search_props);
    search_props.insert("offset".into(), json!({ "type": "integer", "minimum": 0 }));
    search_props.insert(
        "limit".into(),
        json!({ "type": "integer", "minimum": 0, "description": "Page size, capped at 100." }),
    );

    let mut stats_props = Map::new();
    let dims: Vec<&str> = Facet::ALL.iter().map(|f| f.key()).collect();
    stats_props.insert("dimension".into(), json!({ "type": "string", "enum": dims }));
    facet_properties(&mut stats_props);

    vec![
        json!({
            "name": "search_catalog",
            "description": "Keyword search over published entries with optional facet filters. Returns ranked ids, titles and scores.",
            "inputSchema": { "type": "object", "properties": search_props, "additionalProperties": false }
        }),
        json!({
            "name": "get_entry",
            "description": "Fetch one published entry by persistent id.",
            "inputSchema": {
                "type": "object",
                "properties": { "id": { "type": "string" } },
                "required": ["id"],
                "additionalProperties": false
            }
        }),
        json!({
            "name": "aggregate_stats",
            "description": "Count published entries per term of one dimension, optionally filtered by facets.",
            "inputSchema": {
                "type": "object",
                "properties": stats_props,
                "required": ["dimension"],
                "additionalProperties": false
            }
        }),
        json!({
            "name": "validate_links",
            "description": "Re-check the access links of published entries. Nothing is recorded; offline servers report skipped_offline.",
            "inputSchema": {
                "type": "object",
                "properties": {
                    "ids": { "type": "array", "items": { "type": "string" }, "minItems": 1, "maxItems": MAX_LINK_IDS }
                },
                "required": ["ids"],
                "additionalProperties": false
            }
        }),
    ]
}

pub struct McpServer {
    svc: Arc<CatalogService>,
}

impl McpServer {
    pub fn new(svc: Arc<CatalogService>) -> Self {
        McpServer { svc }
    }

    /// Handles one framed message. Returns the serialized reply, or `None`
    /// when the message was a notification.
    pub fn handle_bytes(&self, bytes: &[u8]) -> Option<Vec<u8>> {
        let reply = match serde_json::from_slice::<Value>(bytes) {
            Err(e) => Some(error_response(Value::Null, RpcError::new(PARSE_ERROR, format!("parse error: {e}")))),
            Ok(Value::Array(batch)) if batch.is_empty() => {
                Some(error_response(Value::Null, RpcError::new(INVALID_REQUEST, "empty batch")))
            }
            Ok(Value::Array(batch)) => {
                let replies: Vec<Value> = batch.into_iter().filter_map(|m| self.handle_value(m)).collect();
                (!replies.is_empty()).then_some(Value::Array(replies))
            }
            Ok(v) => self.handle_value(v),
        };
        reply.map(|v| to_canonical_bytes(&v))
    }

    pub fn handle_value(&self, msg: Value) -> Option<Value> {
        let Value::Object(obj) = msg else {
            return Some(error_response(Value::Null, RpcError::new(INVALID_REQUEST, "request must be an object")));
        };
        let id = obj.get("id").cloned();
        let id_ok = matches!(id, None | Some(Value::Null | Value::String(_) | Value::Number(_)));
        if !id_ok || obj.get("jsonrpc").and_then(Value::as_str) != Some("2.0") {
            return Some(error_response(Value::Null, RpcError::new(INVALID_REQUEST, "not a JSON-RPC 2.0 request")));
        }
        let Some(method) = obj.get("method").and_then(Value::as_str) else {
            // Replies sent by a client carry no method and need no answer.
            if id.is_some() && (obj.contains_key("result") || obj.contains_key("error")) {
                return None;
            }
            return Some(error_response(id.unwrap_or(Value::Null), RpcError::new(INVALID_REQUEST, "missing method")));
        };
        let params = obj.get("params").cloned().unwrap_or(Value::Null);
        let outcome = self.dispatch(method, params);
        let id = id?;
        Some(match outcome {
            Ok(result) => result_response(id, result),
            Err(e) => error_response(id, e),
        })
    }

    fn dispatch(&self, method: &str, params: Value) -> Result<Value, RpcError> {
        match method {
            "initialize" => Ok(self.initialize(&params)),
            "ping" => Ok(json!({})),
            "tools/list" => Ok(json!({ "tools": tool_descriptors() })),
            "tools/call" => {
                if let Err(e) = self.svc.sync_if_stale(crate::api::SYNC_INTERVAL) {
                    log::warn!("store sync failed: {e}");
                }
                self.call(&params)
            }
            m if m.starts_with("notifications/") => Ok(Value::Null),
            other => Err(RpcError::new(METHOD_NOT_FOUND, format!("method not found: {other}"))),
        }
    }

    fn initialize(&self, params: &Value) -> Value {
        let requested = params.get("protocolVersion").and_then(Value::as_str);
        let version = requested.filter(|v| PROTOCOL_VERSIONS.contains(v)).unwrap_or(PROTOCOL_VERSIONS[0]);
        json!({
            "protocolVersion": version,
            "capabilities": { "tools": { "listChanged": false } },
            "serverInfo": { "name": SERVER_NAME, "version": env!("CARGO_PKG_VERSION") }
        })
    }

    fn call(&self, params: &Value) -> Result<Value, RpcError> {
        let name = params
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| RpcError::params("tools/call needs a tool name"))?;
        let empty = Map::new();
        let args = match params.get("arguments") {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => return Err(RpcError::params("arguments must be an object")),
        };
        let (payload, is_error) = self.call_tool(name, args)?;
        Ok(json!({
            "content": [{ "type": "text", "text": String::from_utf8(to_canonical_bytes(&payload)).unwrap_or_default() }],
            "structuredContent": payload,
            "isError": is_error
        }))
    }

    /// Runs a tool. Protocol-level argument problems are `Err`; failures
    /// inside the tool come back as a payload with the error flag set.
    pub fn call_tool(&self, name: &str, args: &Map<String, Value>) -> Result<(Value, bool), RpcError> {
        match name {
            "search_catalog" => {
                let spec = search_spec(args)?;
                Ok((search_body(&self.svc.search(&spec)), false))
            }
            "get_entry" => {
                only_keys(args, &["id"])?;
                let id = required_str(args, "id")?;
                Ok(self.get_entry(id))
            }
            "aggregate_stats" => {
                let (dimension, filters) = stats_args(args)?;
                let agg = self.svc.aggregate(dimension.key(), &filters).map_err(|e| RpcError::params(e.to_string()))?;
                Ok((stats_body(&agg), false))
            }
            "validate_links" => {
                only_keys(args, &["ids"])?;
                let ids = string_list(args.get("ids"), "ids")?;
                if ids.is_empty() || ids.len() > MAX_LINK_IDS {
                    return Err(RpcError::params(format!("ids must hold 1 to {MAX_LINK_IDS} entries")));
                }
                let (known, unknown) = self.svc.link_statuses(&ids);
                let results: Vec<Value> =
                    known.into_iter().map(|(id, status)| json!({ "id": id, "link_status": status })).collect();
                let is_error = !unknown.is_empty();
                Ok((json!({ "results": results, "unknown": unknown }), is_error))
            }
            other => Err(RpcError::params(format!("unknown tool `{other}`"))),
        }
    }

    fn get_entry(&self, id: &str) -> (Value, bool) {
        let entry = PersistentId::parse(id)
            .and_then(|p| self.svc.store().entry(&p).ok())
            .filter(|e| e.state == EntryState::Published);
        match entry {
            Some(e) => (e.to_value(), false),
            None => (json!({ "code": "unknown_id", "message": format!("no entry with id `{id}`") }), true),
        }
    }

    /// Reads framed messages until end of input, answering each in order.
    pub fn serve(&self, input: &mut impl BufRead, output: &mut impl Write, framing: Framing) -> io::Result<()> {
        while let Some(frame) = read_frame(input, framing)? {
            let reply = match frame {
                Frame::Message(bytes) => self.handle_bytes(&bytes),
                Frame::BadHeader(reason) => Some(to_canonical_bytes(&error_response(
                    Value::Null,
                    RpcError::new(PARSE_ERROR, format!("parse error: {reason}")),
                ))),
            };
            if let Some(bytes) = reply {
                write_frame(output, framing, &bytes)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, PartialEq, Eq)]
pub enum Frame {
    Message(Vec<u8>),
    BadHeader(String),
}

/// Next message from the stream, or `None` at end of input. Blank ndjson
/// lines are skipped.
pub fn read_frame(input: &mut impl BufRead, framing: Framing) -> io::Result<Option<Frame>> {
    match framing {
        Framing::Ndjson => loop {
            let mut line = Vec::new();
            if input.read_until(b'\n', &mut line)? == 0 {
                return Ok(None);
            }
            if line.iter().any(|b| !b.is_ascii_whitespace()) {
                return Ok(Some(Frame::Message(line)));
            }
        },
        Framing::ContentLength => {
            let mut length = None;
            let mut saw_header = false;
            loop {
                let mut line = String::new();
                if input.read_line(&mut line)? == 0 {
                    return Ok(None);
                }
                let line = line.trim_end_matches(['\r', '\n']);
                if line.is_empty() {
                    if saw_header {
                        break;
                    }
                    continue;
                }
                saw_header = true;
                if let Some((k, v)) = line.split_once(':') {
                    if k.trim().eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse::<usize>().ok();
                    }
                }
            }
            let Some(n) = length else {
                return Ok(Some(Frame::BadHeader("missing or invalid Content-Length".into())));
            };
            let mut body = vec![0; n];
            input.read_exact(&mut body)?;
            Ok(Some(Frame::Message(body)))
        }
    }
}

pub fn write_frame(output: &mut impl Write, framing: Framing, body: &[u8]) -> io::Result<()> {
    match framing {
        Framing::Ndjson => {
            output.write_all(body)?;
            output.write_all(b"\n")?;
        }
        Framing::ContentLength => {
            write!(output, "Content-Length: {}\r\n\r\n", body.len())?;
            output.write_all(body)?;
        }
    }
    output.flush()
}

fn only_keys(args: &Map<String, Value>, allowed: &[&str]) -> Result<(), RpcError> {
    match args.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(RpcError::params(format!("unexpected argument `{k}`"))),
        None => Ok(()),
    }
}

fn required_str<'a>(args: &'a Map<String, Value>, key: &str) -> Result<&'a str, RpcError> {
    args.get(key).and_then(Value::as_str).ok_or_else(|| RpcError::params(format!("`{key}` must be a string")))
}

fn string_list(v: Option<&Value>, key: &str) -> Result<Vec<String>, RpcError> {
    let bad = || RpcError::params(format!("`{key}` must be an array of strings"));
    match v {
        Some(Value::Array(items)) => items.iter().map(|i| i.as_str().map(String::from).ok_or_else(bad)).collect(),
        _ => Err(bad()),
    }
}

fn facet_terms(v: &Value, key: &str) -> Result<Vec<String>, RpcError> {
    let term = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) if n.is_u64() => Some(n.to_string()),
        _ => None,
    };
    let bad = || RpcError::params(format!("`{key}` must be a string or an array of strings"));
    match v {
        Value::Array(items) => items.iter().map(|i| term(i).ok_or_else(bad)).collect(),
        other => term(other).map(|t| vec![t]).ok_or_else(bad),
    }
}

fn usize_arg(args: &Map<String, Value>, key: &str) -> Result<Option<usize>, RpcError> {
    match args.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| RpcError::params(format!("`{key}` must be a non-negative integer"))),
    }
}

fn collect_facets(args: &Map<String, Value>, reserved: &[&str]) -> Result<FacetFilter, RpcError> {
    let mut filter = FacetFilter::new();
    for (k, v) in args {
        if reserved.contains(&k.as_str()) {
            continue;
        }
        let facet = Facet::parse(k)
            .filter(|f| f.key() == k)
            .ok_or_else(|| RpcError::params(format!("unexpected argument `{k}`")))?;
        for t in facet_terms(v, k)? {
            add_facet_term(&mut filter, facet, &t);
        }
    }
    Ok(filter)
}

fn search_spec(args: &Map<String, Value>) -> Result<QuerySpec, RpcError> {
    let text = match args.get("query") {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(RpcError::params("`query` must be a string")),
    };
    let facets = collect_facets(args, &["query", "offset", "limit"])?;
    let mut spec = QuerySpec { text, facets, ..QuerySpec::default() };
    if let Some(o) = usize_arg(args, "offset")? {
        spec.offset = o;
    }
    if let Some(l) = usize_arg(args, "limit")? {
        spec.limit = l.min(MAX_SEARCH_LIMIT);
    }
    Ok(spec)
}

fn stats_args(args: &Map<String, Value>) -> Result<(Facet, FacetFilter), RpcError> {
    let dim = required_str(args, "dimension")?;
    let facet = Facet::parse(dim)
        .filter(|f| f.key() == dim)
        .ok_or_else(|| RpcError::params(format!("unknown dimension `{dim}`")))?;
    Ok((facet, collect_facets(args, &["dimension"])?))
}
