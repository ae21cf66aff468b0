//! Catalog record types, persistent identifiers and the canonical record encoding.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::json;
use crate::urls::canonicalize_url;

pub const SCHEMA_VERSION: &str = "1.0";
const SLUG_MAX: usize = 40;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("malformed json: {0}")]
    MalformedJson(String),
    #[error("missing required key `{0}`")]
    MissingRequiredKey(String),
    #[error("key `{key}` has the wrong type, expected {expected}")]
    TypeMismatch { key: String, expected: &'static str },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// The four typed collections an entry can belong to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Catalog {
    Dataset,
    Model,
    UseCase,
    Oer,
}

impl Catalog {
    pub const ALL: [Catalog; 4] = [Catalog::Dataset, Catalog::Model, Catalog::UseCase, Catalog::Oer];

    pub fn as_str(self) -> &'static str {
        match self {
            Catalog::Dataset => "dataset",
            Catalog::Model => "model",
            Catalog::UseCase => "use_case",
            Catalog::Oer => "oer",
        }
    }

    /// Two-letter tag used inside persistent identifiers.
    pub fn id_tag(self) -> &'static str {
        match self {
            Catalog::Dataset => "ds",
            Catalog::Model => "md",
            Catalog::UseCase => "uc",
            Catalog::Oer => "er",
        }
    }

    /// Accepts the wire name plus a few human spellings ("use case", "OER").
    pub fn parse(s: &str) -> Option<Catalog> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        match key.as_str() {
            "dataset" | "datasets" => Some(Catalog::Dataset),
            "model" | "models" => Some(Catalog::Model),
            "use_case" | "use_cases" | "usecase" => Some(Catalog::UseCase),
            "oer" | "oers" | "educational_resource" => Some(Catalog::Oer),
            _ => None,
        }
    }
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryState {
    Draft,
    PendingReview,
    Published,
    Rejected,
    Retracted,
}

impl EntryState {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryState::Draft => "draft",
            EntryState::PendingReview => "pending_review",
            EntryState::Published => "published",
            EntryState::Rejected => "rejected",
            EntryState::Retracted => "retracted",
        }
    }

    pub fn parse(s: &str) -> Option<EntryState> {
        match s.trim() {
            "draft" => Some(EntryState::Draft),
            "pending_review" => Some(EntryState::PendingReview),
            "published" => Some(EntryState::Published),
            "rejected" => Some(EntryState::Rejected),
            "retracted" => Some(EntryState::Retracted),
            _ => None,
        }
    }

    /// The lifecycle graph: draft → pending_review → {published, rejected, draft},
    /// published → retracted.
    pub fn can_transition_to(self, next: EntryState) -> bool {
        matches!(
            (self, next),
            (EntryState::Draft, EntryState::PendingReview)
                | (EntryState::PendingReview, EntryState::Published)
                | (EntryState::PendingReview, EntryState::Rejected)
                | (EntryState::PendingReview, EntryState::Draft)
                | (EntryState::Published, EntryState::Retracted)
        )
    }
}

impl fmt::Display for EntryState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// RFC 3339 UTC timestamp text. The core never reads a clock; callers supply these.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Timestamp(pub String);

impl Timestamp {
    pub fn new(s: impl Into<String>) -> Self {
        Timestamp(s.into())
    }
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// `oc-<cat>-<slug>-<hash8>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct PersistentId(String);

impl PersistentId {
    /// Validates the textual shape `^oc-(ds|md|uc|er)-[a-z0-9-]{1,40}-[0-9a-f]{8}$`.
    pub fn parse(s: &str) -> Option<PersistentId> {
        let rest = s.strip_prefix("oc-")?;
        let tag = rest.get(..3)?;
        if !matches!(tag, "ds-" | "md-" | "uc-" | "er-") {
            return None;
        }
        let rest = &rest[3..];
        if rest.len() < 10 || !rest.is_ascii() {
            return None;
        }
        let (slug, tail) = rest.split_at(rest.len() - 9);
        let hash = tail.strip_prefix('-')?;
        let slug_ok = (1..=SLUG_MAX).contains(&slug.len())
            && slug
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-');
        let hash_ok = hash
            .bytes()
            .all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b));
        (slug_ok && hash_ok).then(|| PersistentId(s.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn catalog(&self) -> Catalog {
        match &self.0[3..5] {
            "ds" => Catalog::Dataset,
            "md" => Catalog::Model,
            "uc" => Catalog::UseCase,
            _ => Catalog::Oer,
        }
    }
}

impl<'de> Deserialize<'de> for PersistentId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PersistentId::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(alloc::format!("invalid persistent id `{s}`")))
    }
}

impl fmt::Display for PersistentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContributorRef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
}

impl ContributorRef {
    pub fn named(name: impl Into<String>) -> Self {
        ContributorRef { name: name.into(), affiliation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceRef {
    pub repository: String,
    pub record_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkOutcome {
    Valid,
    Broken,
    Unreachable,
    SkippedOffline,
}

impl LinkOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkOutcome::Valid => "valid",
            LinkOutcome::Broken => "broken",
            LinkOutcome::Unreachable => "unreachable",
            LinkOutcome::SkippedOffline => "skipped_offline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStatus {
    pub url: String,
    pub outcome: LinkOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub http_status: Option<u16>,
    pub checked_at: Timestamp,
    pub attempts: u32,
}

/// Named descriptor groups of an entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DescriptorGroup {
    Modalities,
    Tasks,
    Phases,
    Applications,
    Stakeholders,
    Technologies,
    OerFormat,
}

impl DescriptorGroup {
    pub const ALL: [DescriptorGroup; 7] = [
        DescriptorGroup::Modalities,
        DescriptorGroup::Tasks,
        DescriptorGroup::Phases,
        DescriptorGroup::Applications,
        DescriptorGroup::Stakeholders,
        DescriptorGroup::Technologies,
        DescriptorGroup::OerFormat,
    ];

    pub fn key(self) -> &'static str {
        match self {
            DescriptorGroup::Modalities => "modalities",
            DescriptorGroup::Tasks => "tasks",
            DescriptorGroup::Phases => "phases",
            DescriptorGroup::Applications => "applications",
            DescriptorGroup::Stakeholders => "stakeholders",
            DescriptorGroup::Technologies => "technologies",
            DescriptorGroup::OerFormat => "oer_format",
        }
    }

    pub fn parse(s: &str) -> Option<DescriptorGroup> {
        DescriptorGroup::ALL.into_iter().find(|g| g.key() == s.trim())
    }

    /// Groups whose values must come from a controlled vocabulary.
    pub fn is_controlled(self) -> bool {
        matches!(
            self,
            DescriptorGroup::Modalities
                | DescriptorGroup::Tasks
                | DescriptorGroup::Phases
                | DescriptorGroup::OerFormat
        )
    }

    pub fn permitted_for(self, catalog: Catalog) -> bool {
        use DescriptorGroup::*;
        match self {
            Applications | Stakeholders | Technologies | Phases => true,
            Modalities | Tasks => matches!(catalog, Catalog::Dataset | Catalog::Model),
            OerFormat => catalog == Catalog::Oer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainDescriptors {
    pub modalities: BTreeSet<String>,
    pub tasks: BTreeSet<String>,
    pub phases: BTreeSet<String>,
    pub applications: BTreeSet<String>,
    pub stakeholders: BTreeSet<String>,
    pub technologies: BTreeSet<String>,
    pub oer_format: Option<String>,
}

impl DomainDescriptors {
    /// Terms held by one group, in sorted order.
    pub fn terms(&self, group: DescriptorGroup) -> Vec<&str> {
        match group {
            DescriptorGroup::Modalities => self.modalities.iter().map(String::as_str).collect(),
            DescriptorGroup::Tasks => self.tasks.iter().map(String::as_str).collect(),
            DescriptorGroup::Phases => self.phases.iter().map(String::as_str).collect(),
            DescriptorGroup::Applications => self.applications.iter().map(String::as_str).collect(),
            DescriptorGroup::Stakeholders => self.stakeholders.iter().map(String::as_str).collect(),
            DescriptorGroup::Technologies => self.technologies.iter().map(String::as_str).collect(),
            DescriptorGroup::OerFormat => self.oer_format.iter().map(String::as_str).collect(),
        }
    }

    pub fn insert(&mut self, group: DescriptorGroup, term: impl Into<String>) {
        let term = term.into();
        match group {
            DescriptorGroup::Modalities => {
                self.modalities.insert(term);
            }
            DescriptorGroup::Tasks => {
                self.tasks.insert(term);
            }
            DescriptorGroup::Phases => {
                self.phases.insert(term);
            }
            DescriptorGroup::Applications => {
                self.applications.insert(term);
            }
            DescriptorGroup::Stakeholders => {
                self.stakeholders.insert(term);
            }
            DescriptorGroup::Technologies => {
                self.technologies.insert(term);
            }
            DescriptorGroup::OerFormat => self.oer_format = Some(term),
        }
    }

    fn to_value(&self) -> Value {
        let mut map = Map::new();
        for group in DescriptorGroup::ALL {
            if group == DescriptorGroup::OerFormat {
                if let Some(f) = &self.oer_format {
                    map.insert(group.key().into(), Value::String(f.clone()));
                }
                continue;
            }
            let items = self.terms(group).into_iter().map(|t| Value::String(t.into())).collect();
            map.insert(group.key().into(), Value::Array(items));
        }
        Value::Object(map)
    }

    fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let obj = v.as_object().ok_or(SchemaError::TypeMismatch {
            key: "descriptors".into(),
            expected: "object",
        })?;
        let mut out = DomainDescriptors::default();
        for group in DescriptorGroup::ALL {
            let key = alloc::format!("descriptors.{}", group.key());
            match (group, obj.get(group.key())) {
                (_, None) | (_, Some(Value::Null)) => {}
                (DescriptorGroup::OerFormat, Some(Value::String(s))) => out.oer_format = Some(s.clone()),
                (DescriptorGroup::OerFormat, Some(_)) => {
                    return Err(SchemaError::TypeMismatch { key, expected: "string" })
                }
                (g, Some(Value::Array(items))) => {
                    for item in items {
                        let s = item.as_str().ok_or_else(|| SchemaError::TypeMismatch {
                            key: key.clone(),
                            expected: "array of strings",
                        })?;
                        out.insert(g, s);
                    }
                }
                (_, Some(_)) => {
                    return Err(SchemaError::TypeMismatch { key, expected: "array of strings" })
                }
            }
        }
        Ok(out)
    }
}

/// One curated metadata record describing an externally hosted resource.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub id: PersistentId,
    pub catalog: Catalog,
    pub title: String,
    pub description: String,
    pub contributors: Vec<ContributorRef>,
    pub license: String,
    pub access_url: String,
    pub source: SourceRef,
    pub year: Option<i32>,
    pub descriptors: DomainDescriptors,
    pub state: EntryState,
    pub link_status: Option<LinkStatus>,
    pub schema_version: String,
    /// Keys not part of the schema, kept verbatim.
    pub extras: BTreeMap<String, Value>,
}

const KNOWN_KEYS: [&str; 13] = [
    "id",
    "catalog",
    "title",
    "description",
    "contributors",
    "license",
    "access_url",
    "source",
    "year",
    "descriptors",
    "state",
    "link_status",
    "schema_version",
];

impl CatalogEntry {
    pub fn first_contributor(&self) -> Option<&str> {
        self.contributors.first().map(|c| c.name.as_str())
    }

    pub fn to_value(&self) -> Value {
        let mut map = Map::new();
        for (k, v) in &self.extras {
            map.insert(k.clone(), v.clone());
        }
        map.insert("id".into(), Value::String(self.id.as_str().into()));
        map.insert("catalog".into(), Value::String(self.catalog.as_str().into()));
        map.insert("title".into(), Value::String(self.title.clone()));
        map.insert("description".into(), Value::String(self.description.clone()));
        map.insert(
            "contributors".into(),
            serde_json::to_value(&self.contributors).unwrap_or(Value::Null),
        );
        map.insert("license".into(), Value::String(self.license.clone()));
        map.insert("access_url".into(), Value::String(self.access_url.clone()));
        map.insert("source".into(), serde_json::to_value(&self.source).unwrap_or(Value::Null));
        if let Some(y) = self.year {
            map.insert("year".into(), Value::from(y));
        }
        map.insert("descriptors".into(), self.descriptors.to_value());
        map.insert("state".into(), Value::String(self.state.as_str().into()));
        if let Some(ls) = &self.link_status {
            map.insert("link_status".into(), serde_json::to_value(ls).unwrap_or(Value::Null));
        }
        map.insert("schema_version".into(), Value::String(self.schema_version.clone()));
        Value::Object(map)
    }

    pub fn from_value(v: &Value) -> Result<Self, SchemaError> {
        let obj = v.as_object().ok_or(SchemaError::TypeMismatch {
            key: "<root>".into(),
            expected: "object",
        })?;
        let id_text = req_str(obj, "id")?;
        let id = PersistentId::parse(id_text).ok_or(SchemaError::TypeMismatch {
            key: "id".into(),
            expected: "persistent identifier",
        })?;
        let catalog = Catalog::parse(req_str(obj, "catalog")?).ok_or(SchemaError::TypeMismatch {
            key: "catalog".into(),
            expected: "one of dataset|model|use_case|oer",
        })?;
        let title = req_str(obj, "title")?.to_string();
        let description = opt_str(obj, "description")?.unwrap_or_default();
        let contributors = parse_contributors(req(obj, "contributors")?)?;
        let license = req_str(obj, "license")?.to_string();
        let access_url = req_str(obj, "access_url")?.to_string();
        let source = parse_source(req(obj, "source")?)?;
        let year = match obj.get("year") {
            None | Some(Value::Null) => None,
            Some(y) => Some(
                y.as_i64()
                    .and_then(|n| i32::try_from(n).ok())
                    .ok_or(SchemaError::TypeMismatch { key: "year".into(), expected: "integer" })?,
            ),
        };
        let descriptors = match obj.get("descriptors") {
            None | Some(Value::Null) => DomainDescriptors::default(),
            Some(d) => DomainDescriptors::from_value(d)?,
        };
        let state = EntryState::parse(req_str(obj, "state")?).ok_or(SchemaError::TypeMismatch {
            key: "state".into(),
            expected: "one of draft|pending_review|published|rejected|retracted",
        })?;
        let link_status = match obj.get("link_status") {
            None | Some(Value::Null) => None,
            Some(ls) => Some(serde_json::from_value(ls.clone()).map_err(|_| {
                SchemaError::TypeMismatch { key: "link_status".into(), expected: "link status object" }
            })?),
        };
        let schema_version = opt_str(obj, "schema_version")?.unwrap_or_else(|| SCHEMA_VERSION.into());
        let extras = obj
            .iter()
            .filter(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(CatalogEntry {
            id,
            catalog,
            title,
            description,
            contributors,
            license,
            access_url,
            source,
            year,
            descriptors,
            state,
            link_status,
            schema_version,
            extras,
        })
    }
}

fn req<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value, SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(SchemaError::MissingRequiredKey(key.into())),
        Some(v) => Ok(v),
    }
}

fn req_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<&'a str, SchemaError> {
    req(obj, key)?
        .as_str()
        .ok_or(SchemaError::TypeMismatch { key: key.into(), expected: "string" })
}

fn opt_str(obj: &Map<String, Value>, key: &str) -> Result<Option<String>, SchemaError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(SchemaError::TypeMismatch { key: key.into(), expected: "string" }),
    }
}

fn parse_contributors(v: &Value) -> Result<Vec<ContributorRef>, SchemaError> {
    let items = v.as_array().ok_or(SchemaError::TypeMismatch {
        key: "contributors".into(),
        expected: "array of contributor objects",
    })?;
    items
        .iter()
        .map(|item| {
            let obj = item.as_object().ok_or(SchemaError::TypeMismatch {
                key: "contributors".into(),
                expected: "array of contributor objects",
            })?;
            let name = obj.get("name").and_then(Value::as_str).ok_or(SchemaError::TypeMismatch {
                key: "contributors.name".into(),
                expected: "string",
            })?;
            let affiliation = match obj.get("affiliation") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(_) => {
                    return Err(SchemaError::TypeMismatch {
                        key: "contributors.affiliation".into(),
                        expected: "string",
                    })
                }
            };
            Ok(ContributorRef { name: name.into(), affiliation })
        })
        .collect()
}

fn parse_source(v: &Value) -> Result<SourceRef, SchemaError> {
    let obj = v.as_object().ok_or(SchemaError::TypeMismatch {
        key: "source".into(),
        expected: "object",
    })?;
    let field = |k: &str| -> Result<String, SchemaError> {
        obj.get(k).and_then(Value::as_str).map(String::from).ok_or_else(|| {
            SchemaError::TypeMismatch { key: alloc::format!("source.{k}"), expected: "string" }
        })
    };
    Ok(SourceRef { repository: field("repository")?, record_id: field("record_id")? })
}

/// Lowercases and collapses every run of non-alphanumeric characters into one space.
pub fn normalize_title(title: &str) -> String {
    let mut out = String::with_capacity(title.len());
    let mut pending_space = false;
    for ch in title.chars().flat_map(char::to_lowercase) {
        if ch.is_alphanumeric() {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(ch);
        } else {
            pending_space = true;
        }
    }
    out
}

/// Trimmed, lowercased, whitespace-collapsed contributor name.
pub fn normalize_contributor(name: &str) -> String {
    name.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

fn slugify(normalized: &str) -> String {
    let mut slug = String::new();
    for ch in normalized.chars() {
        if ch.is_ascii_alphanumeric() {
            slug.push(ch.to_ascii_lowercase());
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    slug.truncate(SLUG_MAX);
    while slug.ends_with('-') {
        slug.pop();
    }
    if slug.is_empty() {
        slug.push_str("entry");
    }
    slug
}

fn hex_prefix(bytes: &[u8], chars: usize) -> String {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(chars);
    for b in bytes {
        if s.len() >= chars {
            break;
        }
        s.push(HEX[(b >> 4) as usize] as char);
        s.push(HEX[(b & 0x0f) as usize] as char);
    }
    s.truncate(chars);
    s
}

/// Mints the deterministic identifier for a resource.
///
/// The hash covers `catalog|normalized_title|first_contributor|canonical_source_url`,
/// so re-harvesting the same resource always yields the same id.
pub fn mint_identifier(
    catalog: Catalog,
    title: &str,
    first_contributor: &str,
    source_url: &str,
) -> Result<PersistentId, SchemaError> {
    let normalized = normalize_title(title);
    if normalized.is_empty() {
        return Err(SchemaError::InvalidInput("title must not be empty".into()));
    }
    let url = canonicalize_url(source_url)
        .map_err(|_| SchemaError::InvalidInput(alloc::format!("malformed url `{source_url}`")))?;
    let material = alloc::format!(
        "{}|{}|{}|{}",
        catalog.as_str(),
        normalized,
        normalize_contributor(first_contributor),
        url
    );
    let digest = Sha256::digest(material.as_bytes());
    let id = alloc::format!(
        "oc-{}-{}-{}",
        catalog.id_tag(),
        slugify(&normalized),
        hex_prefix(&digest, 8)
    );
    Ok(PersistentId(id))
}

pub fn canonical_serialize(entry: &CatalogEntry) -> Vec<u8> {
    json::to_canonical_bytes(&entry.to_value())
}

pub fn parse_entry(bytes: &[u8]) -> Result<CatalogEntry, SchemaError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| SchemaError::MalformedJson(e.to_string()))?;
    CatalogEntry::from_value(&value)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;
    use proptest::prelude::*;

    pub(crate) fn sample_entry() -> CatalogEntry {
        let id = mint_identifier(
            Catalog::Model,
            "MultiWorker3DPose",
            "A. Author",
            "https://github.com/x/mwp",
        )
        .unwrap();
        let mut descriptors = DomainDescriptors::default();
        descriptors.insert(DescriptorGroup::Tasks, "pose estimation");
        descriptors.insert(DescriptorGroup::Modalities, "video");
        CatalogEntry {
            id,
            catalog: Catalog::Model,
            title: "MultiWorker3DPose".into(),
            description: "Multi-worker 3D pose".into(),
            contributors: vec![ContributorRef::named("A. Author")],
            license: "MIT".into(),
            access_url: "https://github.com/x/mwp".into(),
            source: SourceRef { repository: "github".into(), record_id: "x/mwp".into() },
            year: Some(2025),
            descriptors,
            state: EntryState::Published,
            link_status: None,
            schema_version: SCHEMA_VERSION.into(),
            extras: BTreeMap::new(),
        }
    }

    #[test]
    fn normalize_title_examples() {
        assert_eq!(normalize_title("  Multi-Worker 3D Pose!! "), "multi worker 3d pose");
        assert_eq!(normalize_title("MultiWorker3DPose"), "multiworker3dpose");
        assert_eq!(
            normalize_title("Construction\u{2014}Site   Safety (v2)"),
            "construction site safety v2"
        );
        assert_eq!(normalize_title(""), "");
        assert_eq!(normalize_title("!!!"), "");
    }

    #[test]
    fn mint_matches_hand_computed_digest() {
        // sha256("dataset|multiworker3dpose|a. author|https://github.com/x/mwp")
        //   = ba5b1aab56005c72...
        let id = mint_identifier(
            Catalog::Dataset,
            "MultiWorker3DPose",
            "A. Author",
            "https://github.com/x/mwp",
        )
        .unwrap();
        assert_eq!(id.as_str(), "oc-ds-multiworker3dpose-ba5b1aab");
        assert_eq!(id.catalog(), Catalog::Dataset);
    }

    #[test]
    fn different_source_changes_only_the_hash() {
        // sha256("dataset|multiworker3dpose|a. author|https://github.com/x/other") = fe5c984b...
        let id = mint_identifier(
            Catalog::Dataset,
            "MultiWorker3DPose",
            "A. Author",
            "https://github.com/x/other",
        )
        .unwrap();
        assert_eq!(id.as_str(), "oc-ds-multiworker3dpose-fe5c984b");
    }

    #[test]
    fn mint_is_deterministic_and_rejects_bad_input() {
        let a = mint_identifier(Catalog::Oer, "Intro to BIM", "X", "https://a.org/b").unwrap();
        let b = mint_identifier(Catalog::Oer, "Intro to BIM", "X", "https://a.org/b").unwrap();
        assert_eq!(a, b);
        assert!(mint_identifier(Catalog::Oer, "", "X", "https://a.org").is_err());
        assert!(mint_identifier(Catalog::Oer, "  ?? ", "X", "https://a.org").is_err());
        assert!(mint_identifier(Catalog::Oer, "T", "X", "not a url").is_err());
    }

    #[test]
    fn long_and_unicode_titles_produce_valid_slugs() {
        let long = "A very long title about construction site safety monitoring with drones";
        let id = mint_identifier(Catalog::UseCase, long, "", "https://a.org").unwrap();
        assert!(PersistentId::parse(id.as_str()).is_some(), "{id}");
        let slug = &id.as_str()[6..id.as_str().len() - 9];
        assert!(slug.len() <= 40);
        let cjk = mint_identifier(Catalog::UseCase, "建筑 安全", "", "https://a.org").unwrap();
        assert!(cjk.as_str().starts_with("oc-uc-entry-"));
    }

    #[test]
    fn persistent_id_pattern() {
        assert!(PersistentId::parse("oc-ds-abc-0123abcd").is_some());
        assert!(PersistentId::parse("oc-zz-nope-00000000").is_none());
        assert!(PersistentId::parse("oc-ds--0123abcd").is_none());
        assert!(PersistentId::parse("oc-ds-abc-0123ABCD").is_none());
        assert!(PersistentId::parse("oc-ds-abc/../x-0123abcd").is_none());
        let forty = "a".repeat(40);
        assert!(PersistentId::parse(&format!("oc-md-{forty}-00000000")).is_some());
        let forty_one = "a".repeat(41);
        assert!(PersistentId::parse(&format!("oc-md-{forty_one}-00000000")).is_none());
    }

    #[test]
    fn serialize_omits_absent_year_and_sorts() {
        let mut e = sample_entry();
        e.year = None;
        let bytes = canonical_serialize(&e);
        let text = core::str::from_utf8(&bytes).unwrap();
        assert!(!text.contains("\"year\""));
        assert!(json::is_canonical(&bytes));
        assert_eq!(parse_entry(&bytes).unwrap(), e);
    }

    #[test]
    fn set_insertion_order_is_irrelevant() {
        let mut a = sample_entry();
        let mut b = sample_entry();
        a.descriptors.applications.insert("safety".into());
        a.descriptors.applications.insert("productivity".into());
        b.descriptors.applications.insert("productivity".into());
        b.descriptors.applications.insert("safety".into());
        assert_eq!(canonical_serialize(&a), canonical_serialize(&b));
    }

    #[test]
    fn unknown_keys_are_preserved() {
        let mut v = sample_entry().to_value();
        v.as_object_mut().unwrap().insert("doi".into(), Value::String("10.1/x".into()));
        let bytes = json::to_canonical_bytes(&v);
        let parsed = parse_entry(&bytes).unwrap();
        assert_eq!(parsed.extras.get("doi"), Some(&Value::String("10.1/x".into())));
        assert_eq!(canonical_serialize(&parsed), bytes);
    }

    #[test]
    fn parse_errors_name_the_key() {
        let mut v = sample_entry().to_value();
        v.as_object_mut().unwrap().remove("title");
        assert_eq!(
            parse_entry(&json::to_canonical_bytes(&v)),
            Err(SchemaError::MissingRequiredKey("title".into()))
        );
        let mut v = sample_entry().to_value();
        v.as_object_mut().unwrap().insert("year".into(), Value::String("2020".into()));
        assert!(matches!(
            parse_entry(&json::to_canonical_bytes(&v)),
            Err(SchemaError::TypeMismatch { key, .. }) if key == "year"
        ));
        assert!(matches!(parse_entry(b"{not json"), Err(SchemaError::MalformedJson(_))));
    }

    #[test]
    fn lifecycle_graph() {
        use EntryState::*;
        let all = [Draft, PendingReview, Published, Rejected, Retracted];
        let legal = [
            (Draft, PendingReview),
            (PendingReview, Published),
            (PendingReview, Rejected),
            (PendingReview, Draft),
            (Published, Retracted),
        ];
        for from in all {
            for to in all {
                assert_eq!(from.can_transition_to(to), legal.contains(&(from, to)), "{from}->{to}");
            }
        }
    }

    proptest! {
        #[test]
        fn normalize_title_is_idempotent(t in "\\PC{0,60}") {
            let once = normalize_title(&t);
            prop_assert_eq!(normalize_title(&once), once);
        }

        #[test]
        fn minted_ids_match_pattern(t in "[A-Za-z0-9 !?\u{e9}\u{2014}-]{1,80}", c in "\\PC{0,20}") {
            if let Ok(id) = mint_identifier(Catalog::Model, &t, &c, "https://x.org/r") {
                prop_assert!(PersistentId::parse(id.as_str()).is_some(), "{}", id);
            }
        }
    }
}
