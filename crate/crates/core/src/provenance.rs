//! Lifecycle events and the fold that turns an event log into current state.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::pipeline::{Decision, DuplicateMatch, ReviewDecision, ValidationReport};
use crate::schema::{CatalogEntry, EntryState, LinkStatus, PersistentId, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Harvested,
    Submitted,
    Normalized,
    Validated,
    DedupChecked,
    Reviewed,
    Published,
    Updated,
    Retracted,
    LinkChecked,
}

/// An event before the store assigns its sequence number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewEvent {
    pub kind: EventKind,
    pub actor: String,
    pub payload: Value,
    pub at: Timestamp,
}

impl NewEvent {
    pub fn new(kind: EventKind, actor: impl Into<String>, payload: Value, at: Timestamp) -> Self {
        NewEvent { kind, actor: actor.into(), payload, at }
    }

    pub fn with_entry(kind: EventKind, actor: impl Into<String>, entry: &CatalogEntry, at: Timestamp) -> Self {
        NewEvent::new(kind, actor, json!({ "entry": entry.to_value() }), at)
    }

    pub fn sequenced(self, entry_id: PersistentId, seq: u64) -> ProvenanceEvent {
        ProvenanceEvent {
            entry_id,
            seq,
            kind: self.kind,
            actor: self.actor,
            payload: self.payload,
            at: self.at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceEvent {
    pub entry_id: PersistentId,
    /// Dense, starting at 1, per entry.
    pub seq: u64,
    pub kind: EventKind,
    pub actor: String,
    pub payload: Value,
    pub at: Timestamp,
}

impl ProvenanceEvent {
    pub fn to_canonical_line(&self) -> String {
        let value = serde_json::to_value(self).unwrap_or(Value::Null);
        crate::json::to_canonical_string(&value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("event log is empty")]
    Empty,
    #[error("event log has no entry body")]
    NoEntry,
    #[error("expected seq {expected}, found {found}")]
    SeqGap { expected: u64, found: u64 },
    #[error("event {seq} belongs to {found}, not {expected}")]
    ForeignEvent { seq: u64, expected: String, found: String },
    #[error("event {seq} ({kind:?}) has a malformed payload")]
    BadPayload { seq: u64, kind: EventKind },
    #[error("event {seq} changes state before any entry body exists")]
    Orphan { seq: u64 },
}

/// Current state of one entry plus the review material attached to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Materialized {
    pub entry: CatalogEntry,
    pub report: Option<ValidationReport>,
    pub duplicates: Vec<DuplicateMatch>,
    pub last_decision: Option<ReviewDecision>,
    pub submitter: Option<String>,
    pub last_seq: u64,
}

fn entry_payload(ev: &ProvenanceEvent) -> Result<Option<CatalogEntry>, FoldError> {
    match ev.payload.get("entry") {
        None | Some(Value::Null) => Ok(None),
        Some(v) => CatalogEntry::from_value(v)
            .map(Some)
            .map_err(|_| FoldError::BadPayload { seq: ev.seq, kind: ev.kind }),
    }
}

fn decode<T: serde::de::DeserializeOwned>(ev: &ProvenanceEvent, v: &Value) -> Result<T, FoldError> {
    serde_json::from_value(v.clone()).map_err(|_| FoldError::BadPayload { seq: ev.seq, kind: ev.kind })
}

/// Folds an event log, in seq order, into the entry's current state.
pub fn materialize(events: &[ProvenanceEvent]) -> Result<Materialized, FoldError> {
    let first = events.first().ok_or(FoldError::Empty)?;
    let id = first.entry_id.clone();
    let mut entry: Option<CatalogEntry> = None;
    let mut report = None;
    let mut duplicates = Vec::new();
    let mut last_decision = None;
    let mut submitter = None;

    for (i, ev) in events.iter().enumerate() {
        let expected = i as u64 + 1;
        if ev.seq != expected {
            return Err(FoldError::SeqGap { expected, found: ev.seq });
        }
        if ev.entry_id != id {
            return Err(FoldError::ForeignEvent {
                seq: ev.seq,
                expected: id.as_str().into(),
                found: ev.entry_id.as_str().into(),
            });
        }
        let set_state = |entry: &mut Option<CatalogEntry>, state: EntryState| match entry {
            Some(e) => {
                e.state = state;
                Ok(())
            }
            None => Err(FoldError::Orphan { seq: ev.seq }),
        };
        match ev.kind {
            EventKind::Harvested | EventKind::Normalized => {
                if let Some(e) = entry_payload(ev)? {
                    entry = Some(e);
                }
            }
            EventKind::Submitted => {
                if let Some(e) = entry_payload(ev)? {
                    entry = Some(e);
                }
                set_state(&mut entry, EntryState::PendingReview)?;
                submitter = Some(ev.actor.clone());
            }
            EventKind::Updated => {
                let mut next = entry_payload(ev)?.ok_or(FoldError::BadPayload { seq: ev.seq, kind: ev.kind })?;
                if let Some(prev) = &entry {
                    next.state = prev.state;
                }
                entry = Some(next);
            }
            EventKind::Validated => report = Some(decode(ev, &ev.payload)?),
            EventKind::DedupChecked => {
                let matches = ev.payload.get("matches").cloned().unwrap_or(Value::Array(Vec::new()));
                duplicates = decode(ev, &matches)?;
            }
            EventKind::Reviewed => {
                let decision: ReviewDecision = decode(ev, &ev.payload)?;
                match decision.decision {
                    Decision::Approve => {}
                    Decision::Reject => set_state(&mut entry, EntryState::Rejected)?,
                    Decision::RequestChanges => set_state(&mut entry, EntryState::Draft)?,
                }
                last_decision = Some(decision);
            }
            EventKind::Published => set_state(&mut entry, EntryState::Published)?,
            EventKind::Retracted => set_state(&mut entry, EntryState::Retracted)?,
            EventKind::LinkChecked => {
                let status: LinkStatus = decode(ev, &ev.payload)?;
                match &mut entry {
                    Some(e) => e.link_status = Some(status),
                    None => return Err(FoldError::Orphan { seq: ev.seq }),
                }
            }
        }
    }

    Ok(Materialized {
        entry: entry.ok_or(FoldError::NoEntry)?,
        report,
        duplicates,
        last_decision,
        submitter,
        last_seq: events.len() as u64,
    })
}
