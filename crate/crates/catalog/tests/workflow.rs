mod common;

use std::sync::Arc;

use common::*;
use oc_catalog::clock::FixedClock;
use oc_catalog::config::load_profile;
use oc_catalog::connectors::{Connector, ReplayTransport, SourceConfig};
use oc_catalog::workflow::{draft_from_json, WorkflowError};
use oc_core::pipeline::Decision;
use oc_core::query::QuerySpec;
use oc_core::{Catalog, EntryState};
use serde_json::json;

fn draft() -> serde_json::Value {
    json!({
        "catalog": "dataset",
        "title": "Tunnel Lining Crack Images",
        "description": "Close range photographs of shotcrete tunnel linings with crack masks.",
        "contributors": [{"name": "Dana Ortiz"}],
        "license": "CC-BY-4.0",
        "access_url": "https://data.example.org/tunnel-cracks/",
        "year": 2024,
        "descriptors": {"modalities": ["ground-level rgb"], "tasks": ["segmentation"]}
    })
}

fn fixture_connector() -> Connector {
    let cfg = SourceConfig::load(&fixtures().join("sources/code_host_sample.json")).unwrap();
    Connector::new(cfg, Arc::new(ReplayTransport::new()), true, Arc::new(FixedClock::at(T0))).unwrap()
}

#[test]
fn fixture_harvest_counts_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    let profile = load_profile(&repo_root().join("profiles/code_host.json")).unwrap();

    let first = svc.run_pipeline(&fixture_connector(), &profile);
    assert!(!first.aborted, "{:?}", first.error);
    assert_eq!((first.fetched, first.normalized, first.duplicates, first.queued), (5, 5, 1, 4));
    assert_eq!(svc.store().pending().len(), 4);

    let second = svc.run_pipeline(&fixture_connector(), &profile);
    assert_eq!(second.queued, 0);
    assert_eq!(second.skipped_existing, 4);
    assert_eq!(svc.store().pending().len(), 4);
}

#[test]
fn harvested_entries_carry_harvest_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    let profile = load_profile(&repo_root().join("profiles/code_host.json")).unwrap();
    svc.run_pipeline(&fixture_connector(), &profile);
    let pending = svc.store().pending();
    let m = pending.iter().find(|m| m.entry.title == "site-slam").unwrap();
    assert_eq!(m.entry.catalog, Catalog::Model);
    assert!(m.entry.descriptors.tasks.contains("slam"));
    let events = svc.store().events(&m.entry.id).unwrap();
    let kinds: Vec<String> = events.iter().map(|e| serde_json::to_value(e.kind).unwrap().as_str().unwrap().to_string()).collect();
    assert_eq!(kinds, ["harvested", "normalized", "validated", "dedup_checked", "submitted"]);
    assert!(events.iter().all(|e| e.actor == "system:harvest:code_host_sample"));
}

#[test]
fn submission_requires_an_account() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    let entry = draft_from_json(&draft(), "anon").unwrap();
    assert!(matches!(svc.submit(entry, None), Err(WorkflowError::Unauthenticated)));
    assert_eq!(svc.store().len(), 0);
}

#[test]
fn approve_publishes_and_updates_live_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    add_accounts(&svc);
    let entry = draft_from_json(&draft(), "alice").unwrap();
    let sub = svc.submit(entry, Some(&contributor(&svc))).unwrap();
    assert_eq!(sub.state, EntryState::PendingReview);
    assert!(sub.id.as_str().starts_with("oc-ds-tunnel-lining-crack-images-"));
    assert!(sub.report.has_code("link_unchecked"));

    let err = svc.review(sub.id.as_str(), Decision::Approve, "", Some(&contributor(&svc))).unwrap_err();
    assert!(matches!(err, WorkflowError::Forbidden));

    let state = svc.review(sub.id.as_str(), Decision::Approve, "looks complete", Some(&curator(&svc))).unwrap();
    assert_eq!(state, EntryState::Published);
    let live = std::fs::read_to_string(svc.store().live_path(Catalog::Dataset)).unwrap();
    assert!(live.contains(sub.id.as_str()));
    let hits = svc.search(&QuerySpec::text("tunnel lining"));
    assert_eq!(hits.hits[0].id, sub.id.as_str());

    let again = svc.review(sub.id.as_str(), Decision::Reject, "", Some(&curator(&svc))).unwrap_err();
    assert!(matches!(again, WorkflowError::NotPending(EntryState::Published)));
}

#[test]
fn approval_is_blocked_by_errors() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    add_accounts(&svc);
    let mut body = draft();
    body["license"] = json!("All rights reserved");
    let sub = svc.submit(draft_from_json(&body, "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    assert!(sub.report.has_code("license_not_open"));

    let err = svc.review(sub.id.as_str(), Decision::Approve, "", Some(&curator(&svc))).unwrap_err();
    assert!(matches!(err, WorkflowError::BlockedByErrors(_)));
    assert_eq!(svc.store().entry(&sub.id).unwrap().state, EntryState::PendingReview);
    assert!(svc.store().published(None).is_empty());
}

#[test]
fn reject_leaves_live_catalog_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let svc = seeded_service(dir.path());
    let live = svc.store().live_path(Catalog::Dataset);
    let before = std::fs::read(&live).unwrap();
    let sub = svc.submit(draft_from_json(&draft(), "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    let state = svc.review(sub.id.as_str(), Decision::Reject, "out of scope", Some(&curator(&svc))).unwrap();
    assert_eq!(state, EntryState::Rejected);
    assert_eq!(std::fs::read(&live).unwrap(), before);
}

#[test]
fn request_changes_allows_resubmission() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    add_accounts(&svc);
    let sub = svc.submit(draft_from_json(&draft(), "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    let state = svc.review(sub.id.as_str(), Decision::RequestChanges, "add a year", Some(&curator(&svc))).unwrap();
    assert_eq!(state, EntryState::Draft);
    let again = svc.submit(draft_from_json(&draft(), "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    assert_eq!(again.id, sub.id);
    assert_eq!(again.state, EntryState::PendingReview);
}

#[test]
fn pending_duplicates_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    add_accounts(&svc);
    let first = svc.submit(draft_from_json(&draft(), "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    let mut copy = draft();
    copy["title"] = json!("Tunnel lining crack images (v2)");
    copy["access_url"] = json!("http://www.data.example.org/tunnel-cracks");
    let second = svc.submit(draft_from_json(&copy, "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    assert_ne!(first.id, second.id);
    assert!(second.duplicates.iter().any(|d| d.candidate == first.id));
}

#[test]
fn malformed_url_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    add_accounts(&svc);
    let mut body = draft();
    body["access_url"] = json!("not a url");
    let err = svc.submit(draft_from_json(&body, "alice").unwrap(), Some(&contributor(&svc))).unwrap_err();
    assert!(matches!(err, WorkflowError::Schema(_)));
}

#[test]
fn retract_removes_from_live_but_keeps_log() {
    let dir = tempfile::tempdir().unwrap();
    let svc = seeded_service(dir.path());
    let id = svc.search(&QuerySpec::text("MultiWorker3DPose")).hits[0].id.clone();
    let before = svc.store().events(&oc_core::PersistentId::parse(&id).unwrap()).unwrap().len();
    svc.retract(&id, "withdrawn by authors", Some(&curator(&svc))).unwrap();
    let live = std::fs::read_to_string(svc.store().live_path(Catalog::Model)).unwrap();
    assert!(!live.contains(&id));
    assert_eq!(live.lines().count(), 64);
    let after = svc.store().events(&oc_core::PersistentId::parse(&id).unwrap()).unwrap().len();
    assert_eq!(after, before + 1);
}

#[test]
fn seed_import_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let svc = seeded_service(dir.path());
    assert_eq!(svc.index().len(), 204);
    let again = svc.import_published(&oc_core::seed::generate_seed_catalog(), "seed").unwrap();
    assert_eq!((again.imported, again.skipped_existing), (0, 204));
}
