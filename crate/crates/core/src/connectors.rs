//! Source-neutral harvesting types and search-query construction.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::schema::{SourceRef, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    CodeHost,
    OpenData,
    ModelHub,
    Fixture,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::CodeHost => "code_host",
            SourceKind::OpenData => "open_data",
            SourceKind::ModelHub => "model_hub",
            SourceKind::Fixture => "fixture",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One record as fetched from a source, payload kept verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    /// Shape of the payload; matched against a mapping profile.
    pub kind: SourceKind,
    pub source: SourceRef,
    pub payload: Value,
    pub fetched_at: Timestamp,
}

/// Continuation position within a paginated source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cursor {
    Begin,
    Token(String),
    End,
}

impl Cursor {
    pub fn is_end(&self) -> bool {
        matches!(self, Cursor::End)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("keyword category `{0}` is empty")]
    EmptyCategory(&'static str),
}

fn category(name: &'static str, terms: &[&str]) -> Result<String, QueryError> {
    let quoted: Vec<String> = terms
        .iter()
        .map(|t| t.trim().replace('"', ""))
        .filter(|t| !t.is_empty())
        .map(|t| alloc::format!("\"{t}\""))
        .collect();
    if quoted.is_empty() {
        return Err(QueryError::EmptyCategory(name));
    }
    Ok(alloc::format!("({})", quoted.join(" OR ")))
}

/// Combines the domain, method and access keyword groups with `AND`,
/// each group an `OR` of quoted terms.
pub fn build_query(
    domain_terms: &[&str],
    method_terms: &[&str],
    access_terms: &[&str],
) -> Result<String, QueryError> {
    let parts = [
        category("domain", domain_terms)?,
        category("method", method_terms)?,
        category("access", access_terms)?,
    ];
    Ok(parts.join(" AND ").to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_categories_joined() {
        assert_eq!(
            build_query(&["AEC", "construction"], &["machine learning"], &["dataset"]).unwrap(),
            r#"("AEC" OR "construction") AND ("machine learning") AND ("dataset")"#
        );
        assert_eq!(build_query(&["a"], &["b"], &["c"]).unwrap(), r#"("a") AND ("b") AND ("c")"#);
    }

    #[test]
    fn empty_category_rejected() {
        assert_eq!(
            build_query(&["AEC"], &[], &["dataset"]),
            Err(QueryError::EmptyCategory("method"))
        );
        assert_eq!(
            build_query(&["AEC"], &["ml"], &["  "]),
            Err(QueryError::EmptyCategory("access"))
        );
    }
}
