mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::thread;

use common::*;
use oc_catalog::store::{FileStore, StoreError};
use oc_catalog::workflow::{draft_from_json, CatalogService, WorkflowError};
use oc_core::pipeline::Decision;
use oc_core::query::QuerySpec;
use oc_core::{Catalog, EntryState, PersistentId};
use proptest::prelude::*;
use serde_json::json;

fn draft(n: usize) -> serde_json::Value {
    let license = if n == 2 { "All rights reserved" } else { "CC-BY-4.0" };
    json!({
        "catalog": "dataset",
        "title": format!("Scaffold Inspection Images {n}"),
        "description": "Photographs of scaffold joints.",
        "contributors": [{"name": "Robin Park"}],
        "license": license,
        "access_url": format!("https://data.example.org/scaffold-{n}"),
        "year": 2023,
        "descriptors": {"modalities": ["ground-level rgb"]}
    })
}

fn logs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir.join("log"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn states(svc: &CatalogService) -> BTreeMap<PersistentId, EntryState> {
    svc.store().ids().into_iter().map(|id| (id.clone(), svc.store().entry(&id).unwrap().state)).collect()
}

#[derive(Debug, Clone)]
enum Op {
    Submit(usize),
    Review(usize, Decision),
    Retract(usize),
    Revalidate(usize),
}

fn op() -> impl Strategy<Value = Op> {
    let decision = prop_oneof![Just(Decision::Approve), Just(Decision::Reject), Just(Decision::RequestChanges)];
    prop_oneof![
        (0usize..3).prop_map(Op::Submit),
        ((0usize..3), decision).prop_map(|(n, d)| Op::Review(n, d)),
        (0usize..3).prop_map(Op::Retract),
        (0usize..3).prop_map(Op::Revalidate),
    ]
}

fn id_of(n: usize) -> String {
    let entry = draft_from_json(&draft(n), "alice").unwrap();
    let url = oc_core::canonicalize_url(&entry.access_url).unwrap();
    oc_core::mint_identifier(entry.catalog, &entry.title, "Robin Park", &url).unwrap().as_str().to_string()
}

fn apply(svc: &CatalogService, op: &Op) -> Result<(), WorkflowError> {
    let cur = curator(svc);
    match op {
        Op::Submit(n) => svc.submit(draft_from_json(&draft(*n), "alice").unwrap(), Some(&contributor(svc))).map(drop),
        Op::Review(n, d) => svc.review(&id_of(*n), *d, "", Some(&cur)).map(drop),
        Op::Retract(n) => svc.retract(&id_of(*n), "withdrawn", Some(&cur)).map(drop),
        Op::Revalidate(n) => svc.revalidate(&id_of(*n), "cur").map(drop),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every operation only appends, every state change follows the
    /// lifecycle graph and nothing with an error in its latest report is
    /// ever published.
    #[test]
    fn operations_append_and_follow_the_lifecycle(ops in prop::collection::vec(op(), 1..14)) {
        let dir = tempfile::tempdir().unwrap();
        let svc = offline_service(dir.path());
        add_accounts(&svc);
        for op in &ops {
            let before_logs = logs(dir.path());
            let before = states(&svc);
            let result = apply(&svc, op);
            let after_logs = logs(dir.path());
            for (name, old) in &before_logs {
                prop_assert!(after_logs[name].starts_with(old), "{} rewritten by {:?}", name, op);
            }
            let after = states(&svc);
            for (id, state) in &after {
                match before.get(id) {
                    None => prop_assert_eq!(*state, EntryState::PendingReview),
                    Some(prev) if prev != state => {
                        prop_assert!(result.is_ok(), "{:?} failed but moved {} {}->{}", op, id, prev, state);
                        prop_assert!(prev.can_transition_to(*state), "{:?}: {}->{}", op, prev, state);
                    }
                    Some(_) => {}
                }
                if *state == EntryState::Published {
                    let m = svc.store().materialize(id).unwrap();
                    prop_assert!(m.report.is_some_and(|r| r.is_publishable()));
                }
            }
            let live = fs::read_to_string(svc.store().live_path(Catalog::Dataset)).unwrap_or_default();
            let published = after.values().filter(|s| **s == EntryState::Published).count();
            prop_assert_eq!(live.lines().count(), published);
        }
    }
}

#[test]
fn truncated_logs_load_as_a_prefix_or_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    add_accounts(&svc);
    let sub = svc.submit(draft_from_json(&draft(0), "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    svc.review(sub.id.as_str(), Decision::Approve, "ok", Some(&curator(&svc))).unwrap();
    let full = svc.store().events(&sub.id).unwrap();
    let bytes = fs::read(svc.store().log_path(&sub.id)).unwrap();
    drop(svc);

    let mut cuts: Vec<usize> = (0..bytes.len()).step_by(5).collect();
    cuts.extend(bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i + 1));
    for cut in cuts {
        let copy = tempfile::tempdir().unwrap();
        fs::create_dir_all(copy.path().join("log")).unwrap();
        let path = copy.path().join("log").join(format!("{}.ndjson", sub.id));
        fs::write(&path, &bytes[..cut]).unwrap();
        match FileStore::open(copy.path()) {
            Ok(store) => {
                if let Ok(events) = store.events(&sub.id) {
                    assert!(events.len() <= full.len());
                    assert_eq!(events[..], full[..events.len()], "cut {cut}");
                }
            }
            Err(StoreError::Corrupt { .. }) | Err(StoreError::Rejected { .. }) => {}
            Err(e) => panic!("cut {cut}: unexpected {e}"),
        }
    }
}

#[test]
fn concurrent_submissions_all_land_with_dense_seqs() {
    let dir = tempfile::tempdir().unwrap();
    let svc = Arc::new(seeded_service(dir.path()));
    let handles: Vec<_> = (10..18)
        .map(|n| {
            let svc = svc.clone();
            thread::spawn(move || svc.submit(draft_from_json(&draft(n), "alice").unwrap(), Some(&contributor(&svc))))
        })
        .collect();
    let readers: Vec<_> = (0..4)
        .map(|_| {
            let svc = svc.clone();
            thread::spawn(move || {
                for _ in 0..50 {
                    assert_eq!(svc.search(&QuerySpec::text("crack")).total, svc.search(&QuerySpec::text("crack")).total);
                }
            })
        })
        .collect();
    for h in handles {
        let sub = h.join().unwrap().unwrap();
        let seqs: Vec<u64> = svc.store().events(&sub.id).unwrap().iter().map(|e| e.seq).collect();
        assert_eq!(seqs, [1, 2, 3]);
    }
    for r in readers {
        r.join().unwrap();
    }
    assert_eq!(svc.store().pending().len(), 8);
}

#[test]
fn replaying_copied_logs_reproduces_states_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let svc = seeded_service(dir.path());
    let cur = curator(&svc);
    let a = svc.submit(draft_from_json(&draft(0), "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    let b = svc.submit(draft_from_json(&draft(1), "alice").unwrap(), Some(&contributor(&svc))).unwrap();
    svc.review(a.id.as_str(), Decision::Approve, "", Some(&cur)).unwrap();
    svc.review(b.id.as_str(), Decision::Reject, "", Some(&cur)).unwrap();
    let pose = svc.search(&QuerySpec::text("MultiWorker3DPose")).hits[0].id.clone();
    svc.retract(&pose, "superseded", Some(&cur)).unwrap();
    svc.store().sync_all_live().unwrap();

    let fresh = tempfile::tempdir().unwrap();
    copy_dir(&dir.path().join("log"), &fresh.path().join("log"));
    let replayed = FileStore::open(fresh.path()).unwrap();
    replayed.sync_all_live().unwrap();

    assert_eq!(replayed.ids(), svc.store().ids());
    for id in svc.store().ids() {
        assert_eq!(replayed.materialize(&id).unwrap(), svc.store().materialize(&id).unwrap(), "{id}");
    }
    for c in Catalog::ALL {
        assert_eq!(fs::read(replayed.live_path(c)).unwrap(), fs::read(svc.store().live_path(c)).unwrap(), "{c}");
    }
}

#[test]
fn a_second_process_view_catches_up_on_write() {
    let dir = tempfile::tempdir().unwrap();
    let server = seeded_service(dir.path());
    let cli = offline_service(dir.path());
    let sub = cli.submit(draft_from_json(&draft(0), "alice").unwrap(), Some(&contributor(&cli))).unwrap();
    cli.review(sub.id.as_str(), Decision::Approve, "", Some(&curator(&cli))).unwrap();
    assert!(!server.store().contains(&sub.id));
    assert!(server.sync().unwrap());
    assert_eq!(server.store().entry(&sub.id).unwrap().state, EntryState::Published);
    assert_eq!(server.index().len(), 205);
}
