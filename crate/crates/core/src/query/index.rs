use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::Serialize;

use super::{expand_query, resolve_filter, tokenize, Facet, FacetFilter, QueryError, QuerySpec};
use crate::schema::{Catalog, CatalogEntry, DescriptorGroup, PersistentId};
use crate::vocab::VocabularySet;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
/// Title term frequencies count this many times.
pub const TITLE_WEIGHT: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Field {
    Title,
    Description,
    Descriptors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub field: Field,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocInfo {
    pub id: PersistentId,
    pub title: String,
    pub catalog: Catalog,
    /// Token count over all indexed fields.
    pub length: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hit {
    pub id: String,
    pub score: f64,
    pub title: String,
    pub catalog: Catalog,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchPage {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub hits: Vec<Hit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Aggregation {
    pub dimension: String,
    pub counts: BTreeMap<String, usize>,
    /// Distinct entries passing the filters.
    pub total: usize,
}

/// Inverted index plus facet tables. Immutable once built; documents are
/// numbered in id order so index order doubles as the tie-break.
#[derive(Debug, Clone, Default)]
pub struct SearchIndex {
    docs: Vec<DocInfo>,
    postings: BTreeMap<String, Vec<Posting>>,
    facets: BTreeMap<Facet, BTreeMap<String, BTreeSet<u32>>>,
    avg_len: f64,
}

fn count_into(tokens: Vec<String>, field: Field, doc: u32, postings: &mut BTreeMap<String, Vec<Posting>>) -> u32 {
    let len = tokens.len() as u32;
    let mut tf: BTreeMap<String, u32> = BTreeMap::new();
    for t in tokens {
        *tf.entry(t).or_default() += 1;
    }
    for (token, n) in tf {
        postings.entry(token).or_default().push(Posting { doc, field, tf: n });
    }
    len
}

impl SearchIndex {
    pub fn build<'a>(entries: impl IntoIterator<Item = &'a CatalogEntry>) -> Self {
        let mut sorted: BTreeMap<&PersistentId, &CatalogEntry> = BTreeMap::new();
        for e in entries {
            sorted.insert(&e.id, e);
        }
        let mut index = SearchIndex::default();
        let mut total_len = 0u64;
        for (n, entry) in sorted.values().enumerate() {
            let doc = n as u32;
            let mut length = count_into(tokenize(&entry.title), Field::Title, doc, &mut index.postings);
            length += count_into(tokenize(&entry.description), Field::Description, doc, &mut index.postings);
            let descriptor_tokens: Vec<String> = DescriptorGroup::ALL
                .iter()
                .flat_map(|g| entry.descriptors.terms(*g))
                .flat_map(tokenize)
                .collect();
            length += count_into(descriptor_tokens, Field::Descriptors, doc, &mut index.postings);
            total_len += u64::from(length);

            let mut add = |facet: Facet, term: String| {
                index.facets.entry(facet).or_default().entry(term).or_default().insert(doc);
            };
            add(Facet::Catalog, entry.catalog.as_str().into());
            for m in &entry.descriptors.modalities {
                add(Facet::Modality, m.clone());
            }
            for t in &entry.descriptors.tasks {
                add(Facet::Task, t.clone());
            }
            for p in &entry.descriptors.phases {
                add(Facet::Phase, p.clone());
            }
            if let Some(f) = &entry.descriptors.oer_format {
                add(Facet::OerFormat, f.clone());
            }
            if let Some(y) = entry.year {
                add(Facet::Year, y.to_string());
            }
            if !entry.license.trim().is_empty() {
                add(Facet::License, entry.license.trim().to_lowercase());
            }

            index.docs.push(DocInfo {
                id: entry.id.clone(),
                title: entry.title.clone(),
                catalog: entry.catalog,
                length,
            });
        }
        index.avg_len = if index.docs.is_empty() { 0.0 } else { total_len as f64 / index.docs.len() as f64 };
        index
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[DocInfo] {
        &self.docs
    }

    pub fn postings(&self, token: &str) -> &[Posting] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Ids in one facet bucket.
    pub fn bucket(&self, facet: Facet, term: &str) -> Vec<&PersistentId> {
        self.facets
            .get(&facet)
            .and_then(|b| b.get(term))
            .map(|docs| docs.iter().map(|d| &self.docs[*d as usize].id).collect())
            .unwrap_or_default()
    }

    /// Docs satisfying an already-resolved filter; `None` when unconstrained.
    fn filtered(&self, filter: &FacetFilter) -> Option<BTreeSet<u32>> {
        let mut result: Option<BTreeSet<u32>> = None;
        for (facet, terms) in filter {
            if terms.is_empty() {
                continue;
            }
            let buckets = self.facets.get(facet);
            let mut union = BTreeSet::new();
            for term in terms {
                if let Some(docs) = buckets.and_then(|b| b.get(term)) {
                    union.extend(docs.iter().copied());
                }
            }
            result = Some(match result {
                None => union,
                Some(prev) => prev.intersection(&union).copied().collect(),
            });
        }
        result
    }

    fn idf(&self, doc_freq: usize) -> f64 {
        let n = self.docs.len() as f64;
        let df = doc_freq as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    /// BM25 over the weighted term frequency `2·tf_title + tf_description + tf_descriptors`.
    fn bm25(&self, weighted_tf: f64, doc_len: u32, idf: f64) -> f64 {
        let avg = if self.avg_len > 0.0 { self.avg_len } else { 1.0 };
        let norm = 1.0 - BM25_B + BM25_B * f64::from(doc_len) / avg;
        idf * weighted_tf * (BM25_K1 + 1.0) / (weighted_tf + BM25_K1 * norm)
    }

    pub fn search(&self, spec: &QuerySpec, vocabs: &VocabularySet) -> SearchPage {
        let filter = resolve_filter(&spec.facets, vocabs);
        let allowed = self.filtered(&filter);
        let tokens = expand_query(&spec.text, vocabs);
        let permitted = |doc: u32| allowed.as_ref().is_none_or(|a| a.contains(&doc));

        let mut scored: Vec<(u32, f64)> = if tokens.is_empty() {
            match &allowed {
                Some(a) => a.iter().map(|d| (*d, 0.0)).collect(),
                None => (0..self.docs.len() as u32).map(|d| (d, 0.0)).collect(),
            }
        } else {
            let mut scores: BTreeMap<u32, f64> = BTreeMap::new();
            for token in &tokens {
                let postings = self.postings(token);
                if postings.is_empty() {
                    continue;
                }
                let mut weighted: BTreeMap<u32, u32> = BTreeMap::new();
                for p in postings {
                    let w = if p.field == Field::Title { TITLE_WEIGHT * p.tf } else { p.tf };
                    *weighted.entry(p.doc).or_default() += w;
                }
                let idf = self.idf(weighted.len());
                for (doc, tf) in weighted {
                    if permitted(doc) {
                        let len = self.docs[doc as usize].length;
                        *scores.entry(doc).or_default() += self.bm25(f64::from(tf), len, idf);
                    }
                }
            }
            scores.into_iter().collect()
        };

        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal).then(a.0.cmp(&b.0)));
        let total = scored.len();
        let hits = scored
            .into_iter()
            .skip(spec.offset)
            .take(spec.limit)
            .map(|(doc, score)| {
                let info = &self.docs[doc as usize];
                Hit { id: info.id.as_str().into(), score, title: info.title.clone(), catalog: info.catalog }
            })
            .collect();
        SearchPage { total, offset: spec.offset, limit: spec.limit, hits }
    }

    /// Entries per term of `dimension` after filters; multi-labelled entries
    /// count once per label.
    pub fn aggregate(&self, dimension: Facet, filters: &FacetFilter, vocabs: &VocabularySet) -> Aggregation {
        let allowed = self.filtered(&resolve_filter(filters, vocabs));
        let mut counts = BTreeMap::new();
        if let Some(buckets) = self.facets.get(&dimension) {
            for (term, docs) in buckets {
                let n = match &allowed {
                    Some(a) => docs.intersection(a).count(),
                    None => docs.len(),
                };
                if n > 0 {
                    counts.insert(term.clone(), n);
                }
            }
        }
        let total = allowed.map(|a| a.len()).unwrap_or(self.docs.len());
        Aggregation { dimension: dimension.key().into(), counts, total }
    }

    pub fn aggregate_named(
        &self,
        dimension: &str,
        filters: &FacetFilter,
        vocabs: &VocabularySet,
    ) -> Result<Aggregation, QueryError> {
        let facet = Facet::parse(dimension).ok_or_else(|| QueryError::UnknownDimension(dimension.into()))?;
        Ok(self.aggregate(facet, filters, vocabs))
    }
}
