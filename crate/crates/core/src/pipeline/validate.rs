//! Completeness, license, vocabulary and link findings for a single entry.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::{CatalogEntry, DescriptorGroup, LinkOutcome, LinkStatus, Timestamp};
use crate::urls::is_absolute_url;
use crate::vocab::VocabularySet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl Finding {
    pub fn error(code: &str, field: &str, message: impl Into<String>) -> Self {
        Finding { code: code.into(), severity: Severity::Error, field: field.into(), message: message.into() }
    }

    pub fn warning(code: &str, field: &str, message: impl Into<String>) -> Self {
        Finding { code: code.into(), severity: Severity::Warning, field: field.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entry_id: String,
    pub findings: Vec<Finding>,
    pub checked_at: Timestamp,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<LinkStatus>,
}

impl ValidationReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    /// No error-severity findings. Publication still needs a curator.
    pub fn is_publishable(&self) -> bool {
        self.error_count() == 0
    }

    pub fn has_code(&self, code: &str) -> bool {
        self.findings.iter().any(|f| f.code == code)
    }
}

/// Licenses accepted as open or academic by default.
pub const DEFAULT_LICENSE_ALLOWLIST: [&str; 12] = [
    "CC0-1.0",
    "CC-BY-4.0",
    "CC-BY-SA-4.0",
    "CC-BY-NC-4.0",
    "MIT",
    "Apache-2.0",
    "BSD-2-Clause",
    "BSD-3-Clause",
    "GPL-2.0",
    "GPL-3.0",
    "ODbL-1.0",
    "academic-use",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupThresholds {
    pub title_similarity: f64,
    pub contributor_jaccard: f64,
}

impl Default for DedupThresholds {
    fn default() -> Self {
        DedupThresholds { title_similarity: 0.8, contributor_jaccard: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinkCheckToggles {
    /// Run link checks during validation when not offline.
    pub enabled: bool,
    /// Treat broken or unreachable links as errors.
    pub blocking: bool,
}

impl Default for LinkCheckToggles {
    fn default() -> Self {
        LinkCheckToggles { enabled: true, blocking: true }
    }
}

/// Contents of `policy/publish.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PublishPolicy {
    pub license_allowlist: BTreeSet<String>,
    pub thresholds: DedupThresholds,
    pub link_check: LinkCheckToggles,
}

impl Default for PublishPolicy {
    fn default() -> Self {
        PublishPolicy {
            license_allowlist: DEFAULT_LICENSE_ALLOWLIST.iter().map(|s| s.to_string()).collect(),
            thresholds: DedupThresholds::default(),
            link_check: LinkCheckToggles::default(),
        }
    }
}

impl PublishPolicy {
    pub fn license_allowed(&self, license: &str) -> bool {
        let license = license.trim();
        self.license_allowlist.iter().any(|l| l.eq_ignore_ascii_case(license))
    }
}

/// Outcome for a final HTTP status: valid exactly on 200..=399.
pub fn classify_http_status(status: u16) -> LinkOutcome {
    if (200..=399).contains(&status) {
        LinkOutcome::Valid
    } else {
        LinkOutcome::Broken
    }
}

/// Checks an entry against the publish policy.
///
/// `link` is the result of a link check performed by the caller, if any.
/// Problems become findings; this never fails.
pub fn validate_entry(
    entry: &CatalogEntry,
    policy: &PublishPolicy,
    vocabs: &VocabularySet,
    link: Option<&LinkStatus>,
    checked_at: Timestamp,
) -> ValidationReport {
    let mut findings = Vec::new();

    if entry.title.trim().is_empty() {
        findings.push(Finding::error("title_empty", "title", "title must not be empty"));
    }
    if entry.contributors.iter().all(|c| c.name.trim().is_empty()) {
        findings.push(Finding::error(
            "contributors_empty",
            "contributors",
            "at least one named contributor is required",
        ));
    }
    if entry.license.trim().is_empty() {
        findings.push(Finding::error("license_empty", "license", "license must not be empty"));
    } else if !policy.license_allowed(&entry.license) {
        findings.push(Finding::error(
            "license_not_open",
            "license",
            format!("license `{}` is not on the open/academic allowlist", entry.license),
        ));
    }
    if !is_absolute_url(&entry.access_url) {
        findings.push(Finding::error(
            "access_url_malformed",
            "access_url",
            format!("`{}` is not an absolute URL", entry.access_url),
        ));
    }

    for group in DescriptorGroup::ALL {
        let terms = entry.descriptors.terms(group);
        if terms.is_empty() {
            continue;
        }
        let field = format!("descriptors.{}", group.key());
        if !group.permitted_for(entry.catalog) {
            findings.push(Finding::error(
                "descriptor_not_permitted",
                &field,
                format!("`{}` descriptors are not permitted on {} entries", group.key(), entry.catalog),
            ));
            continue;
        }
        if let Some(vocab) = vocabs.for_group(group) {
            for term in terms {
                // Stored terms must already be canonical.
                if vocab.lookup(term) != Some(term) {
                    findings.push(Finding::error(
                        "vocabulary_unknown_term",
                        &field,
                        format!("`{term}` is not a canonical term of vocabulary `{}`", vocab.name()),
                    ));
                }
            }
        }
    }

    if entry.description.trim().is_empty() {
        findings.push(Finding::warning("description_missing", "description", "description is empty"));
    }
    if entry.year.is_none() {
        findings.push(Finding::warning("year_missing", "year", "publication year is absent"));
    }

    if let Some(status) = link {
        let blocking = policy.link_check.blocking;
        let push = |findings: &mut Vec<Finding>, code: &str, msg: String| {
            findings.push(if blocking {
                Finding::error(code, "access_url", msg)
            } else {
                Finding::warning(code, "access_url", msg)
            })
        };
        match status.outcome {
            LinkOutcome::Valid => {}
            LinkOutcome::Broken => push(
                &mut findings,
                "link_broken",
                match status.http_status {
                    Some(code) => format!("access link returned HTTP {code}"),
                    None => "access link is broken".into(),
                },
            ),
            LinkOutcome::Unreachable => push(
                &mut findings,
                "link_unreachable",
                format!("access link unreachable after {} attempts", status.attempts),
            ),
            LinkOutcome::SkippedOffline => findings.push(Finding::warning(
                "link_unchecked",
                "access_url",
                "link check skipped in offline mode",
            )),
        }
    }

    ValidationReport {
        entry_id: entry.id.as_str().into(),
        findings,
        checked_at,
        link: link.cloned(),
    }
}
