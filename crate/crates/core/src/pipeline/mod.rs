//! Pure stages of the ingestion workflow: mapping, validation, dedup and review.

pub mod dedup;
pub mod mapping;
pub mod review;
pub mod validate;

pub use dedup::{find_duplicates, DedupIndex, DuplicateMatch, Evidence, Verdict};
pub use mapping::{normalize_record, MappingError, MappingProfile, NormalizedDraft, ProfileError};
pub use review::{apply_decision, Decision, ReviewDecision, ReviewError, Role};
pub use validate::{
    classify_http_status, validate_entry, DedupThresholds, Finding, PublishPolicy, Severity,
    ValidationReport,
};
