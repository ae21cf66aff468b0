//! Keyword search, facet filtering and aggregation over published entries.

mod index;

pub use index::{Aggregation, DocInfo, Field, Hit, Posting, SearchIndex, SearchPage, BM25_B, BM25_K1, TITLE_WEIGHT};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::schema::Catalog;
use crate::vocab::VocabularySet;

/// Lowercases, splits on non-alphanumerics and drops one-character tokens
/// unless they are digits. No stemming.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    lower
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| {
            let mut chars = t.chars();
            match (chars.next(), chars.next()) {
                (None, _) => false,
                (Some(c), None) => c.is_ascii_digit(),
                _ => true,
            }
        })
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Facet {
    Catalog,
    Modality,
    Task,
    Phase,
    OerFormat,
    Year,
    License,
}

impl Facet {
    pub const ALL: [Facet; 7] = [
        Facet::Catalog,
        Facet::Modality,
        Facet::Task,
        Facet::Phase,
        Facet::OerFormat,
        Facet::Year,
        Facet::License,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Facet::Catalog => "catalog",
            Facet::Modality => "modality",
            Facet::Task => "task",
            Facet::Phase => "phase",
            Facet::OerFormat => "oer_format",
            Facet::Year => "year",
            Facet::License => "license",
        }
    }

    pub fn parse(s: &str) -> Option<Facet> {
        match s.trim() {
            "catalog" => Some(Facet::Catalog),
            "modality" | "modalities" => Some(Facet::Modality),
            "task" | "tasks" => Some(Facet::Task),
            "phase" | "phases" => Some(Facet::Phase),
            "oer_format" => Some(Facet::OerFormat),
            "year" => Some(Facet::Year),
            "license" => Some(Facet::License),
            _ => None,
        }
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),
}

/// Facet constraints: AND across facets, OR within one facet.
pub type FacetFilter = BTreeMap<Facet, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub text: String,
    pub facets: FacetFilter,
    pub offset: usize,
    pub limit: usize,
}

impl Default for QuerySpec {
    fn default() -> Self {
        QuerySpec { text: String::new(), facets: BTreeMap::new(), offset: 0, limit: 10 }
    }
}

impl QuerySpec {
    pub fn text(text: &str) -> Self {
        QuerySpec { text: text.into(), ..QuerySpec::default() }
    }

    pub fn with_facet(mut self, facet: Facet, term: &str) -> Self {
        self.facets.entry(facet).or_default().insert(term.into());
        self
    }

    pub fn page(mut self, offset: usize, limit: usize) -> Self {
        self.offset = offset;
        self.limit = limit;
        self
    }
}

/// Canonical facet term for matching against the index.
///
/// Vocabulary-backed facets resolve aliases; unknown terms pass through
/// lowercased and simply match nothing.
pub fn resolve_facet_term(facet: Facet, term: &str, vocabs: &VocabularySet) -> String {
    let group = match facet {
        Facet::Catalog => {
            return Catalog::parse(term)
                .map(|c| c.as_str().to_string())
                .unwrap_or_else(|| term.trim().to_lowercase());
        }
        Facet::Year => return term.trim().to_string(),
        Facet::License => return term.trim().to_lowercase(),
        Facet::Modality => &vocabs.modalities,
        Facet::Task => &vocabs.tasks,
        Facet::Phase => &vocabs.phases,
        Facet::OerFormat => &vocabs.oer_format,
    };
    group.lookup(term).map(String::from).unwrap_or_else(|| term.trim().to_lowercase())
}

pub fn resolve_filter(filter: &FacetFilter, vocabs: &VocabularySet) -> FacetFilter {
    filter
        .iter()
        .map(|(facet, terms)| {
            (*facet, terms.iter().map(|t| resolve_facet_term(*facet, t, vocabs)).collect())
        })
        .collect()
}

/// Query tokens plus the tokens of any vocabulary term the whole query is an alias of.
pub fn expand_query(text: &str, vocabs: &VocabularySet) -> BTreeSet<String> {
    let mut tokens: BTreeSet<String> = tokenize(text).into_iter().collect();
    for vocab in vocabs.iter() {
        if let Some(canonical) = vocab.lookup(text) {
            tokens.extend(tokenize(canonical));
        }
    }
    tokens
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Pose Estimation"), vec!["pose", "estimation"]);
        assert_eq!(tokenize("3D re-construction"), vec!["3d", "re", "construction"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a 1 b2 x"), vec!["1", "b2"]);
    }

    #[test]
    fn facet_terms_resolve_through_vocabularies() {
        let v = VocabularySet::default();
        assert_eq!(resolve_facet_term(Facet::Task, "Object Detection", &v), "object detection");
        assert_eq!(resolve_facet_term(Facet::Modality, "LiDAR", &v), "point cloud");
        assert_eq!(resolve_facet_term(Facet::Catalog, "Use Case", &v), "use_case");
        assert_eq!(resolve_facet_term(Facet::License, "MIT", &v), "mit");
        assert_eq!(resolve_facet_term(Facet::Task, "Holography", &v), "holography");
    }

    #[test]
    fn alias_expansion() {
        let v = VocabularySet::default();
        let t = expand_query("lidar", &v);
        assert!(t.contains("lidar") && t.contains("point") && t.contains("cloud"));
        assert_eq!(expand_query("crane", &v).len(), 1);
    }
}
