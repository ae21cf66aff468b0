mod common;

use std::sync::Arc;

use common::*;
use oc_catalog::clock::FixedClock;
use oc_catalog::config::load_profile;
use oc_catalog::connectors::{Connector, HttpResponse, ReplayTransport, SourceConfig};
use oc_core::connectors::SourceKind;

fn recorded_source(token: Option<&str>) -> SourceConfig {
    SourceConfig {
        name: "github".into(),
        kind: SourceKind::CodeHost,
        base_url: "https://api.github.com".into(),
        auth_token: token.map(String::from),
        query: "construction computer vision".into(),
        keywords: None,
        page_size: 30,
        record_kind: None,
    }
}

fn replay(cfg: &SourceConfig) -> (Arc<ReplayTransport>, Connector) {
    let probe = Connector::new(cfg.clone(), Arc::new(ReplayTransport::new()), false, Arc::new(FixedClock::at(T0))).unwrap();
    let url = probe.code_host_url(1).unwrap();
    let body = std::fs::read(fixtures().join("recorded/code_host_search.json")).unwrap();
    let transport = Arc::new(ReplayTransport::new().route(url, HttpResponse::ok_json(body)));
    let conn = Connector::new(cfg.clone(), transport.clone(), false, Arc::new(FixedClock::at(T0))).unwrap();
    (transport, conn)
}

#[test]
fn recorded_code_host_response_flows_through_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    let profile = load_profile(&repo_root().join("profiles/code_host.json")).unwrap();
    let (transport, conn) = replay(&recorded_source(Some("ghp_example")));

    let summary = svc.run_pipeline(&conn, &profile);
    assert!(!summary.aborted, "{:?}", summary.error);
    assert_eq!((summary.fetched, summary.normalized, summary.queued), (3, 3, 3));

    let reqs = transport.requests();
    assert_eq!(reqs.len(), 1);
    assert!(reqs[0].url.starts_with("https://api.github.com/search/repositories?q=construction"));
    assert!(reqs[0].headers.iter().any(|(k, v)| k == "authorization" && v == "Bearer ghp_example"));

    let pending = svc.store().pending();
    let pose = pending.iter().find(|m| m.entry.title == "excavator-pose").unwrap();
    assert!(pose.entry.descriptors.tasks.contains("pose estimation"));
    let report = pose.report.as_ref().unwrap();
    assert!(report.has_code("license_empty"));
    assert!(report.has_code("field_unmapped"));

    let walls = pending.iter().find(|m| m.entry.title == "pointnet-walls").unwrap();
    assert_eq!(walls.entry.access_url, "https://github.com/scan2bim/pointnet-walls");
    assert_eq!(walls.entry.source.repository, "github");
    assert_eq!(walls.entry.source.record_id, "scan2bim/pointnet-walls");
}

#[test]
fn missing_route_aborts_without_queueing() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    let profile = load_profile(&repo_root().join("profiles/code_host.json")).unwrap();
    let conn =
        Connector::new(recorded_source(None), Arc::new(ReplayTransport::new()), false, Arc::new(FixedClock::at(T0))).unwrap();
    let summary = svc.run_pipeline(&conn, &profile);
    assert!(summary.aborted);
    assert!(summary.error.is_some());
    assert_eq!(svc.store().len(), 0);
}

#[test]
fn profile_kind_mismatch_counts_as_normalize_failure() {
    let dir = tempfile::tempdir().unwrap();
    let svc = offline_service(dir.path());
    let profile = load_profile(&repo_root().join("profiles/open_data.json")).unwrap();
    let (_, conn) = replay(&recorded_source(None));
    let summary = svc.run_pipeline(&conn, &profile);
    assert_eq!((summary.fetched, summary.failed_normalize, summary.queued), (3, 3, 0));
}

#[test]
fn shipped_profiles_and_sources_load() {
    for name in ["code_host", "open_data", "model_hub"] {
        load_profile(&repo_root().join(format!("profiles/{name}.json"))).unwrap();
    }
    let cfg = SourceConfig::load(&fixtures().join("sources/code_host_sample.json")).unwrap();
    assert!(cfg.fixture_dir().is_dir());
}
