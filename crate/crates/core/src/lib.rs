//! Core catalog logic with no I/O: record schema and identifiers, controlled
//! vocabularies, URL canonicalization, record mapping, validation, duplicate
//! detection, review rules, provenance folding, search and aggregation.
#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod connectors;
pub mod json;
pub mod pipeline;
pub mod provenance;
pub mod query;
pub mod schema;
pub mod seed;
pub mod urls;
pub mod vocab;

pub use schema::{
    canonical_serialize, mint_identifier, normalize_title, parse_entry, Catalog, CatalogEntry,
    ContributorRef, DescriptorGroup, DomainDescriptors, EntryState, LinkOutcome, LinkStatus,
    PersistentId, SchemaError, SourceRef, Timestamp,
};
pub use urls::canonicalize_url;
pub use vocab::{ControlledVocabulary, VocabularySet};
