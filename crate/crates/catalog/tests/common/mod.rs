#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use oc_catalog::accounts::Account;
use oc_catalog::clock::FixedClock;
use oc_catalog::linkcheck::{LinkCheckConfig, LinkChecker};
use oc_catalog::store::FileStore;
use oc_catalog::workflow::CatalogService;
use oc_core::pipeline::validate::PublishPolicy;
use oc_core::pipeline::Role;
use oc_core::seed::generate_seed_catalog;
use oc_core::VocabularySet;

pub const T0: &str = "2025-03-01T12:00:00Z";
pub const CURATOR_TOKEN: &str = "curator-secret-1";
pub const CONTRIBUTOR_TOKEN: &str = "contrib-secret-1";

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixtures() -> PathBuf {
    repo_root().join("fixtures")
}

pub fn offline_service(dir: &Path) -> CatalogService {
    let clock = Arc::new(FixedClock::at(T0));
    let store = FileStore::open_with_clock(dir, clock.clone()).unwrap();
    let links = LinkChecker::http(LinkCheckConfig::offline(), clock);
    CatalogService::new(store, PublishPolicy::default(), VocabularySet::default(), links).unwrap()
}

/// Offline service holding the published seed catalog plus one curator
/// (`cur`) and one contributor (`alice`).
pub fn seeded_service(dir: &Path) -> CatalogService {
    let svc = offline_service(dir);
    let summary = svc.import_published(&generate_seed_catalog(), "seed").unwrap();
    assert_eq!(summary.imported, 204, "rejected: {:?}", summary.rejected);
    add_accounts(&svc);
    svc
}

pub fn add_accounts(svc: &CatalogService) {
    svc.add_account(Account::new("cur", Role::Curator, CURATOR_TOKEN).unwrap()).unwrap();
    svc.add_account(Account::new("alice", Role::Contributor, CONTRIBUTOR_TOKEN).unwrap()).unwrap();
}

pub fn curator(svc: &CatalogService) -> Account {
    svc.account("cur").unwrap()
}

pub fn contributor(svc: &CatalogService) -> Account {
    svc.account("alice").unwrap()
}

/// Copies a directory tree (one level of nesting is enough for stores).
pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let dest = to.join(e.file_name());
        if e.path().is_dir() {
            copy_dir(&e.path(), &dest);
        } else {
            std::fs::copy(e.path(), dest).unwrap();
        }
    }
}
