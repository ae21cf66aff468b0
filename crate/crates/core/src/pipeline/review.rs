//! Curator decisions and the review gate.

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::validate::ValidationReport;
use crate::schema::{EntryState, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Contributor,
    Curator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Approve,
    Reject,
    RequestChanges,
}

impl Decision {
    pub fn parse(s: &str) -> Option<Decision> {
        match s.trim() {
            "approve" => Some(Decision::Approve),
            "reject" => Some(Decision::Reject),
            "request_changes" => Some(Decision::RequestChanges),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub submission_id: String,
    pub curator_id: String,
    pub decision: Decision,
    #[serde(default)]
    pub rationale: String,
    pub decided_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReviewError {
    #[error("entry is {0}, not pending review")]
    NotPending(EntryState),
    #[error("only curators may review submissions")]
    Forbidden,
    #[error("approval blocked: the current validation report has {0} error finding(s)")]
    BlockedByErrors(usize),
    #[error("approval requires a current validation report")]
    MissingReport,
}

/// State an entry moves to under `decision`, or why it cannot.
pub fn apply_decision(
    role: Role,
    state: EntryState,
    decision: Decision,
    report: Option<&ValidationReport>,
) -> Result<EntryState, ReviewError> {
    if role != Role::Curator {
        return Err(ReviewError::Forbidden);
    }
    if state != EntryState::PendingReview {
        return Err(ReviewError::NotPending(state));
    }
    match decision {
        Decision::Approve => {
            let report = report.ok_or(ReviewError::MissingReport)?;
            match report.error_count() {
                0 => Ok(EntryState::Published),
                n => Err(ReviewError::BlockedByErrors(n)),
            }
        }
        Decision::Reject => Ok(EntryState::Rejected),
        Decision::RequestChanges => Ok(EntryState::Draft),
    }
}
