//! Mapping profiles turn a source-shaped JSON payload into a draft entry.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::connectors::{RawRecord, SourceKind};
use crate::pipeline::validate::Finding;
use crate::schema::{
    mint_identifier, Catalog, CatalogEntry, ContributorRef, DescriptorGroup, DomainDescriptors,
    EntryState, SCHEMA_VERSION,
};
use crate::urls::canonicalize_url;
use crate::vocab::VocabularySet;

/// Entry fields that every profile must either map or fill with a constant.
pub const REQUIRED_FIELDS: [&str; 5] = ["catalog", "title", "contributors", "license", "access_url"];
const MAPPABLE_FIELDS: [&str; 7] =
    ["catalog", "title", "description", "contributors", "license", "access_url", "year"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProfileError {
    #[error("malformed profile: {0}")]
    Malformed(String),
    #[error("required field `{0}` is neither mapped nor constant-filled")]
    Unmapped(String),
    #[error("unknown entry field `{0}`")]
    UnknownField(String),
    #[error("unknown descriptor group `{0}`")]
    UnknownGroup(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("profile expects {expected} records, got {found}")]
    ProfileMismatch { expected: SourceKind, found: SourceKind },
    #[error("required field `{0}` could not be mapped")]
    RequiredFieldUnmappable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldRule {
    /// JSON pointer into the payload, e.g. `/license/spdx_id`.
    pub path: String,
    /// A missing value becomes an empty field plus a warning instead of an error.
    #[serde(default)]
    pub optional: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptorRule {
    pub path: String,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingProfile {
    pub name: String,
    pub source_kind: SourceKind,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldRule>,
    #[serde(default)]
    pub constants: BTreeMap<String, Value>,
    #[serde(default)]
    pub descriptors: Vec<DescriptorRule>,
}

impl MappingProfile {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ProfileError> {
        let profile: MappingProfile =
            serde_json::from_slice(bytes).map_err(|e| ProfileError::Malformed(e.to_string()))?;
        profile.check()?;
        Ok(profile)
    }

    /// Rejects profiles that leave a required field unmapped or name unknown targets.
    pub fn check(&self) -> Result<(), ProfileError> {
        for key in self.fields.keys().chain(self.constants.keys()) {
            if !MAPPABLE_FIELDS.contains(&key.as_str()) {
                return Err(ProfileError::UnknownField(key.clone()));
            }
        }
        for field in REQUIRED_FIELDS {
            if !self.fields.contains_key(field) && !self.constants.contains_key(field) {
                return Err(ProfileError::Unmapped(field.into()));
            }
        }
        for rule in &self.descriptors {
            if DescriptorGroup::parse(&rule.group).is_none() {
                return Err(ProfileError::UnknownGroup(rule.group.clone()));
            }
        }
        Ok(())
    }

    fn lookup<'a>(&'a self, payload: &'a Value, field: &str) -> Option<&'a Value> {
        let mapped = self
            .fields
            .get(field)
            .and_then(|rule| payload.pointer(&rule.path))
            .filter(|v| !is_blank(v));
        mapped.or_else(|| self.constants.get(field))
    }

    fn is_optional(&self, field: &str) -> bool {
        self.fields.get(field).is_some_and(|r| r.optional)
    }
}

fn is_blank(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::String(s) => s.trim().is_empty(),
        Value::Array(a) => a.is_empty(),
        _ => false,
    }
}

/// A freshly normalized record plus the mapping warnings it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDraft {
    pub entry: CatalogEntry,
    pub warnings: Vec<Finding>,
}

fn text_of(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn contributor_of(v: &Value) -> Option<ContributorRef> {
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(ContributorRef::named(s.trim())),
        Value::Object(obj) => {
            let name = ["name", "full_name", "login", "author"]
                .iter()
                .find_map(|k| obj.get(*k).and_then(Value::as_str))
                .map(str::trim)
                .filter(|s| !s.is_empty())?;
            let affiliation = obj
                .get("affiliation")
                .and_then(Value::as_str)
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty());
            Some(ContributorRef { name: name.into(), affiliation })
        }
        _ => None,
    }
}

fn contributors_of(v: &Value) -> Vec<ContributorRef> {
    match v {
        Value::Array(items) => items.iter().filter_map(contributor_of).collect(),
        other => contributor_of(other).into_iter().collect(),
    }
}

fn year_of(v: &Value) -> Option<i32> {
    match v {
        Value::Number(n) => n.as_i64().and_then(|y| i32::try_from(y).ok()),
        Value::String(s) => s.trim().get(..4).and_then(|y| y.parse().ok()),
        _ => None,
    }
}

fn strings_of(v: &Value) -> Vec<String> {
    match v {
        Value::Array(items) => items.iter().filter_map(text_of).collect(),
        other => text_of(other).into_iter().collect(),
    }
}

/// Maps `raw` through `profile` into a draft entry with a minted id,
/// a canonical access URL and vocabulary-resolved descriptors.
pub fn normalize_record(
    raw: &RawRecord,
    profile: &MappingProfile,
    vocabs: &VocabularySet,
) -> Result<NormalizedDraft, MappingError> {
    if raw.kind != profile.source_kind {
        return Err(MappingError::ProfileMismatch { expected: profile.source_kind, found: raw.kind });
    }
    let payload = &raw.payload;
    let mut warnings = Vec::new();
    let unmappable = |f: &str| MappingError::RequiredFieldUnmappable(f.into());

    let required_text = |field: &str, warnings: &mut Vec<Finding>| -> Result<String, MappingError> {
        match profile.lookup(payload, field).and_then(text_of).filter(|s| !s.is_empty()) {
            Some(s) => Ok(s),
            None if profile.is_optional(field) => {
                warnings.push(Finding::warning(
                    "field_unmapped",
                    field,
                    format!("source record has no value for `{field}`"),
                ));
                Ok(String::new())
            }
            None => Err(unmappable(field)),
        }
    };

    let catalog_text = required_text("catalog", &mut warnings)?;
    let catalog = Catalog::parse(&catalog_text).ok_or_else(|| unmappable("catalog"))?;
    let title = required_text("title", &mut warnings)?;
    if title.is_empty() {
        return Err(unmappable("title"));
    }
    let license = required_text("license", &mut warnings)?;
    let url_text = required_text("access_url", &mut warnings)?;
    let access_url = canonicalize_url(&url_text).map_err(|_| unmappable("access_url"))?;

    let contributors = profile.lookup(payload, "contributors").map(contributors_of).unwrap_or_default();
    if contributors.is_empty() {
        if profile.is_optional("contributors") {
            warnings.push(Finding::warning(
                "field_unmapped",
                "contributors",
                "source record has no contributors",
            ));
        } else {
            return Err(unmappable("contributors"));
        }
    }

    let description = profile.lookup(payload, "description").and_then(text_of).unwrap_or_default();
    let year = profile.lookup(payload, "year").and_then(year_of);

    let mut descriptors = DomainDescriptors::default();
    for rule in &profile.descriptors {
        // Group names were checked when the profile was loaded.
        let Some(group) = DescriptorGroup::parse(&rule.group) else { continue };
        let field = format!("descriptors.{}", group.key());
        let Some(values) = payload.pointer(&rule.path) else { continue };
        for term in strings_of(values) {
            if term.is_empty() {
                continue;
            }
            if !group.permitted_for(catalog) {
                warnings.push(Finding::warning(
                    "descriptor_not_permitted",
                    &field,
                    format!("dropped `{term}`: group not used by {catalog} entries"),
                ));
                continue;
            }
            match vocabs.for_group(group) {
                Some(vocab) => match vocab.lookup(&term) {
                    Some(canonical) => descriptors.insert(group, canonical),
                    None => warnings.push(Finding::warning(
                        "descriptor_term_unmapped",
                        &field,
                        format!("`{term}` is not in vocabulary `{}`", vocab.name()),
                    )),
                },
                None => descriptors.insert(group, term),
            }
        }
    }

    let first = contributors.first().map(|c| c.name.as_str()).unwrap_or("");
    let id = mint_identifier(catalog, &title, first, &access_url).map_err(|_| unmappable("title"))?;

    Ok(NormalizedDraft {
        entry: CatalogEntry {
            id,
            catalog,
            title,
            description,
            contributors,
            license,
            access_url,
            source: raw.source.clone(),
            year,
            descriptors,
            state: EntryState::Draft,
            link_status: None,
            schema_version: SCHEMA_VERSION.into(),
            extras: BTreeMap::new(),
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{SourceRef, Timestamp};
    use serde_json::json;

    fn profile() -> MappingProfile {
        MappingProfile::from_json(
            br#"{
              "name": "code_host",
              "source_kind": "code_host",
              "fields": {
                "title": {"path": "/name"},
                "description": {"path": "/description"},
                "license": {"path": "/license/spdx_id", "optional": true},
                "access_url": {"path": "/html_url"},
                "contributors": {"path": "/owner/login"},
                "year": {"path": "/created_at"}
              },
              "constants": {"catalog": "model"},
              "descriptors": [{"path": "/topics", "group": "tasks"}]
            }"#,
        )
        .unwrap()
    }

    fn raw(payload: Value) -> RawRecord {
        RawRecord {
            kind: SourceKind::CodeHost,
            source: SourceRef { repository: "github".into(), record_id: "1".into() },
            payload,
            fetched_at: Timestamp::new("2025-01-01T00:00:00Z"),
        }
    }

    #[test]
    fn maps_fields_and_resolves_descriptors() {
        let r = raw(json!({
            "name": "crane-tracker",
            "description": "Tracks tower cranes",
            "license": {"spdx_id": "MIT"},
            "html_url": "http://www.github.com/acme/crane-tracker/",
            "owner": {"login": "acme"},
            "created_at": "2023-04-01T10:00:00Z",
            "topics": ["Object Tracking", "holography"]
        }));
        let d = normalize_record(&r, &profile(), &VocabularySet::default()).unwrap();
        assert!(d.entry.id.as_str().starts_with("oc-md-crane-tracker-"));
        assert_eq!(d.entry.access_url, "https://github.com/acme/crane-tracker");
        assert_eq!(d.entry.license, "MIT");
        assert_eq!(d.entry.year, Some(2023));
        assert_eq!(d.entry.contributors[0].name, "acme");
        assert!(d.entry.descriptors.tasks.contains("tracking"));
        assert_eq!(d.entry.state, EntryState::Draft);
        assert_eq!(d.warnings.len(), 1);
        assert_eq!(d.warnings[0].code, "descriptor_term_unmapped");
    }

    #[test]
    fn optional_license_missing_is_a_warning() {
        let r = raw(json!({
            "name": "x", "html_url": "https://github.com/a/x", "owner": {"login": "a"}
        }));
        let d = normalize_record(&r, &profile(), &VocabularySet::default()).unwrap();
        assert_eq!(d.entry.license, "");
        assert!(d.warnings.iter().any(|w| w.code == "field_unmapped" && w.field == "license"));
    }

    #[test]
    fn missing_title_is_unmappable() {
        let r = raw(json!({"html_url": "https://github.com/a/x", "owner": {"login": "a"}}));
        assert_eq!(
            normalize_record(&r, &profile(), &VocabularySet::default()),
            Err(MappingError::RequiredFieldUnmappable("title".into()))
        );
    }

    #[test]
    fn kind_mismatch_rejected() {
        let mut r = raw(json!({}));
        r.kind = SourceKind::OpenData;
        assert!(matches!(
            normalize_record(&r, &profile(), &VocabularySet::default()),
            Err(MappingError::ProfileMismatch { .. })
        ));
    }

    #[test]
    fn incomplete_profiles_rejected_at_load() {
        let err = MappingProfile::from_json(
            br#"{"name":"p","source_kind":"fixture","fields":{"title":{"path":"/t"}}}"#,
        )
        .unwrap_err();
        assert_eq!(err, ProfileError::Unmapped("catalog".into()));
        let err = MappingProfile::from_json(
            br#"{"name":"p","source_kind":"fixture","fields":{"colour":{"path":"/c"}}}"#,
        )
        .unwrap_err();
        assert_eq!(err, ProfileError::UnknownField("colour".into()));
    }
}
