//! Duplicate detection from repository URL, title tokens and contributor names.
//!
//! Verdicts:
//! - canonical access URLs equal: `duplicate`
//! - title Jaccard ≥ title threshold and contributor Jaccard ≥ contributor threshold: `duplicate`
//! - title Jaccard ≥ title threshold only: `needs_review`
//! - otherwise `distinct` (never returned)

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::pipeline::validate::DedupThresholds;
use crate::schema::{normalize_contributor, normalize_title, CatalogEntry, PersistentId};
use crate::urls::canonicalize_url;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    RepoUrlEqual,
    TitleSimilar,
    ContributorOverlap,
}

/// Ordered so that `Duplicate` is the strongest verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Distinct,
    NeedsReview,
    Duplicate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateMatch {
    pub candidate: PersistentId,
    pub evidence: BTreeSet<Evidence>,
    pub title_similarity: f64,
    pub contributor_jaccard: f64,
    pub verdict: Verdict,
}

/// Precomputed comparison material for one entry.
#[derive(Debug, Clone)]
pub struct DedupKey {
    pub id: PersistentId,
    pub url: String,
    pub title_tokens: BTreeSet<String>,
    pub contributors: BTreeSet<String>,
}

impl DedupKey {
    pub fn of(entry: &CatalogEntry) -> Self {
        let url = canonicalize_url(&entry.access_url).unwrap_or_else(|_| entry.access_url.trim().into());
        let title_tokens = normalize_title(&entry.title)
            .split(' ')
            .filter(|t| !t.is_empty())
            .map(String::from)
            .collect();
        let contributors = entry
            .contributors
            .iter()
            .map(|c| normalize_contributor(&c.name))
            .filter(|n| !n.is_empty())
            .collect();
        DedupKey { id: entry.id.clone(), url, title_tokens, contributors }
    }
}

/// |A ∩ B| / |A ∪ B|, zero when both sets are empty.
pub fn jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn compare_keys(a: &DedupKey, b: &DedupKey, thresholds: &DedupThresholds) -> DuplicateMatch {
    let mut evidence = BTreeSet::new();
    let url_equal = !a.url.is_empty() && a.url == b.url;
    if url_equal {
        evidence.insert(Evidence::RepoUrlEqual);
    }
    let title_similarity = jaccard(&a.title_tokens, &b.title_tokens);
    let title_similar = title_similarity >= thresholds.title_similarity;
    if title_similar {
        evidence.insert(Evidence::TitleSimilar);
    }
    let contributor_jaccard = jaccard(&a.contributors, &b.contributors);
    let contributors_overlap = contributor_jaccard >= thresholds.contributor_jaccard;
    if contributors_overlap {
        evidence.insert(Evidence::ContributorOverlap);
    }
    let verdict = if url_equal || (title_similar && contributors_overlap) {
        Verdict::Duplicate
    } else if title_similar {
        Verdict::NeedsReview
    } else {
        Verdict::Distinct
    };
    DuplicateMatch { candidate: b.id.clone(), evidence, title_similarity, contributor_jaccard, verdict }
}

pub fn compare(a: &CatalogEntry, b: &CatalogEntry, thresholds: &DedupThresholds) -> DuplicateMatch {
    compare_keys(&DedupKey::of(a), &DedupKey::of(b), thresholds)
}

fn rank(matches: &mut [DuplicateMatch]) {
    matches.sort_by(|x, y| {
        y.verdict
            .cmp(&x.verdict)
            .then_with(|| y.title_similarity.partial_cmp(&x.title_similarity).unwrap_or(Ordering::Equal))
            .then_with(|| x.candidate.cmp(&y.candidate))
    });
}

/// Compares `entry` against every corpus member (skipping itself) and keeps
/// the non-distinct matches, strongest first.
pub fn find_duplicates<'a>(
    entry: &CatalogEntry,
    corpus: impl IntoIterator<Item = &'a CatalogEntry>,
    thresholds: &DedupThresholds,
) -> Vec<DuplicateMatch> {
    let key = DedupKey::of(entry);
    let mut out: Vec<DuplicateMatch> = corpus
        .into_iter()
        .filter(|other| other.id != entry.id)
        .map(|other| compare_keys(&key, &DedupKey::of(other), thresholds))
        .filter(|m| m.verdict != Verdict::Distinct)
        .collect();
    rank(&mut out);
    out
}

/// Blocking index: candidates share a canonical URL or at least one title
/// token. Any pair reaching a non-distinct verdict satisfies one of these
/// (title similarity above a positive threshold needs a shared token), so
/// lookups agree with the exhaustive scan.
#[derive(Debug, Clone)]
pub struct DedupIndex {
    keys: Vec<DedupKey>,
    by_url: BTreeMap<String, Vec<usize>>,
    by_token: BTreeMap<String, Vec<usize>>,
    thresholds: DedupThresholds,
}

impl DedupIndex {
    pub fn new(thresholds: DedupThresholds) -> Self {
        DedupIndex { keys: Vec::new(), by_url: BTreeMap::new(), by_token: BTreeMap::new(), thresholds }
    }

    pub fn from_entries<'a>(
        entries: impl IntoIterator<Item = &'a CatalogEntry>,
        thresholds: DedupThresholds,
    ) -> Self {
        let mut idx = DedupIndex::new(thresholds);
        for e in entries {
            idx.insert(e);
        }
        idx
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn insert(&mut self, entry: &CatalogEntry) {
        let key = DedupKey::of(entry);
        let slot = self.keys.len();
        if !key.url.is_empty() {
            self.by_url.entry(key.url.clone()).or_default().push(slot);
        }
        for token in &key.title_tokens {
            self.by_token.entry(token.clone()).or_default().push(slot);
        }
        self.keys.push(key);
    }

    pub fn find(&self, entry: &CatalogEntry) -> Vec<DuplicateMatch> {
        let key = DedupKey::of(entry);
        let mut candidates = BTreeSet::new();
        if let Some(slots) = self.by_url.get(&key.url) {
            candidates.extend(slots.iter().copied());
        }
        if self.thresholds.title_similarity > 0.0 {
            for token in &key.title_tokens {
                if let Some(slots) = self.by_token.get(token) {
                    candidates.extend(slots.iter().copied());
                }
            }
        } else {
            candidates.extend(0..self.keys.len());
        }
        let mut out: Vec<DuplicateMatch> = candidates
            .into_iter()
            .map(|slot| &self.keys[slot])
            .filter(|other| other.id != key.id)
            .map(|other| compare_keys(&key, other, &self.thresholds))
            .filter(|m| m.verdict != Verdict::Distinct)
            .collect();
        rank(&mut out);
        out
    }
}
