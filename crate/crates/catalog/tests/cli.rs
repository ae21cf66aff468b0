mod common;

use std::path::Path;

use common::*;
use oc_catalog::cli::run;
use oc_catalog::stub::StubServer;
use serde_json::{json, Value};

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Out {
    fn json(&self) -> Value {
        serde_json::from_str(self.stdout.trim_end()).unwrap_or_else(|e| panic!("{e}: {:?}", self.stdout))
    }
}

fn oc_env(args: &[&str], env: &[(&str, &str)]) -> Out {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let env: Vec<(String, String)> = env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let lookup = move |k: &str| env.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone());
    let mut stdin = std::io::empty();
    let mut argv = vec!["oc"];
    argv.extend_from_slice(args);
    let code = run(argv, &lookup, &mut stdin, &mut stdout, &mut stderr);
    Out { code, stdout: String::from_utf8(stdout).unwrap(), stderr: String::from_utf8(stderr).unwrap() }
}

fn oc(args: &[&str]) -> Out {
    oc_env(args, &[])
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A data dir with the seed catalog imported through the CLI.
fn seeded(dir: &Path) -> String {
    let data = dir.join("data");
    let seed = fixtures().join("seed_catalog");
    let out = oc(&["--data-dir", s(&data), "--offline", "--format", "json", "import", s(&seed)]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.json()["imported"], 204);
    data.to_str().unwrap().to_string()
}

fn profile() -> String {
    repo_root().join("profiles/code_host.json").to_str().unwrap().to_string()
}

#[test]
fn seed_fixture_is_deterministic_and_matches_shipped_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(oc(&["seed-fixture", "--out", s(a.path())]).code, 0);
    assert_eq!(oc(&["seed-fixture", "--out", s(b.path())]).code, 0);
    for name in ["dataset.ndjson", "model.ndjson", "use_case.ndjson", "oer.ndjson"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(name)).unwrap(), "{name}");
        assert_eq!(x, std::fs::read(fixtures().join("seed_catalog").join(name)).unwrap(), "{name}");
    }
}

#[test]
fn stats_json_on_seed_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = seeded(dir.path());
    let out = oc(&["--data-dir", &data, "stats", "--dimension", "catalog", "--format", "json"]);
    assert_eq!(out.code, 0);
    assert_eq!(out.json()["counts"], json!({"dataset": 94, "model": 65, "use_case": 28, "oer": 17}));
    assert_eq!(out.stdout.lines().count(), 1);

    let filtered = oc(&["--data-dir", &data, "--format", "json", "stats", "--dimension", "phase", "--filter", "catalog=use_case"]);
    assert_eq!(filtered.json()["counts"]["construction"], 18);

    let table = oc(&["--data-dir", &data, "stats", "--dimension", "oer_format"]);
    assert!(table.stdout.contains("textbook"), "{}", table.stdout);
}

#[test]
fn env_data_dir_is_used_below_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = seeded(dir.path());
    let via_env = oc_env(&["--format", "json", "stats", "--dimension", "catalog"], &[("OC_DATA_DIR", &data)]);
    assert_eq!(via_env.json()["total"], 204);
    let empty = dir.path().join("empty");
    let flag_wins = oc_env(
        &["--format", "json", "--data-dir", s(&empty), "stats", "--dimension", "catalog"],
        &[("OC_DATA_DIR", &data)],
    );
    assert_eq!(flag_wins.json()["total"], 0);
}

#[test]
fn config_file_sets_format() {
    let dir = tempfile::tempdir().unwrap();
    let data = seeded(dir.path());
    let cfg = dir.path().join("oc.toml");
    std::fs::write(&cfg, format!("data_dir = {:?}\nformat = \"json\"\n", data)).unwrap();
    let out = oc(&["--config", s(&cfg), "search", "pose estimation", "--filter", "catalog=model"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let titles: Vec<String> =
        out.json()["items"].as_array().unwrap().iter().map(|h| h["title"].as_str().unwrap().to_string()).collect();
    assert!(titles.iter().any(|t| t == "MultiWorker3DPose"));
}

#[test]
fn validate_file_missing_license_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("entry.json");
    std::fs::write(
        &file,
        json!({
            "catalog": "dataset",
            "title": "Facade Thermal Survey",
            "contributors": [{"name": "R. Imai"}],
            "access_url": "https://thermal.example.org/facade"
        })
        .to_string(),
    )
    .unwrap();
    let data = dir.path().join("data");
    let out = oc(&["--data-dir", s(&data), "--offline", "--format", "json", "validate", s(&file)]);
    assert_eq!(out.code, 3, "{}", out.stderr);
    let report = out.json();
    let codes: Vec<&str> = report["findings"].as_array().unwrap().iter().map(|f| f["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"license_empty"), "{codes:?}");

    let table = oc(&["--data-dir", s(&data), "--offline", "validate", s(&file)]);
    assert_eq!(table.code, 3);
    assert!(table.stdout.contains("license_empty"));
}

#[test]
fn validate_schema_broken_file_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("entry.json");
    std::fs::write(&file, r#"{"title": "no catalog"}"#).unwrap();
    let out = oc(&["--data-dir", s(&dir.path().join("d")), "--offline", "--format", "json", "validate", s(&file)]);
    assert_eq!(out.code, 3);
    assert_eq!(out.json()["findings"][0]["code"], "schema_invalid");
}

#[test]
fn usage_errors_exit_2_with_synopsis() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let source = fixtures().join("sources/code_host_sample.json");
    let out = oc(&["--data-dir", s(&data), "harvest", "--source", s(&source), "--profile", "/no/such/profile.json"]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("Usage:"), "{}", out.stderr);

    let bogus = oc(&["frobnicate"]);
    assert_eq!(bogus.code, 2);
    assert!(bogus.stderr.contains("Usage"));

    let neither = oc(&["--data-dir", s(&data), "validate", "not-a-file-or-id"]);
    assert_eq!(neither.code, 2);

    let json_mode = oc(&["--format", "json", "--data-dir", s(&data), "stats"]);
    assert_eq!(json_mode.code, 2);
    assert!(json_mode.json()["error"].is_object());
}

#[test]
fn harvest_review_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let d = s(&data);
    let source = fixtures().join("sources/code_host_sample.json");

    let h = oc(&["--data-dir", d, "--offline", "--format", "json", "harvest", "--source", s(&source), "--profile", &profile()]);
    assert_eq!(h.code, 0, "{}", h.stderr);
    let summary = h.json();
    assert_eq!((summary["fetched"].as_u64(), summary["duplicates"].as_u64(), summary["queued"].as_u64()), (Some(5), Some(1), Some(4)));

    let acct = oc(&["--data-dir", d, "--format", "json", "add-account", "--id", "cur", "--role", "curator"]);
    assert_eq!(acct.code, 0);
    assert_eq!(acct.json()["token"].as_str().unwrap().len(), 48);

    let svc = offline_service(&data);
    let pending: Vec<String> = svc.store().pending().iter().map(|m| m.entry.id.as_str().to_string()).collect();
    drop(svc);
    let slam = pending.iter().find(|id| id.contains("site-slam")).unwrap();

    let no_decision = oc(&["--data-dir", d, "review", slam, "--curator", "cur"]);
    assert_eq!(no_decision.code, 2);
    let stranger = oc(&["--data-dir", d, "review", slam, "--approve", "--curator", "mallory"]);
    assert_eq!(stranger.code, 1);

    let ok = oc(&["--data-dir", d, "--format", "json", "review", slam, "--approve", "--curator", "cur"]);
    assert_eq!(ok.code, 0, "{}", ok.stderr);
    assert_eq!(ok.json()["state"], "published");

    // GPL-3.0 is allowed; an entry outside the allowlist would block.
    let rejected = pending.iter().find(|id| id.contains("ppe-detector")).unwrap();
    let r = oc(&["--data-dir", d, "--format", "json", "review", rejected, "--reject", "--curator", "cur", "--rationale", "dup"]);
    assert_eq!(r.json()["state"], "rejected");

    let snap = dir.path().join("model.ndjson");
    let out = oc(&["--data-dir", d, "--format", "json", "publish-snapshot", "--catalog", "model", "--out", s(&snap)]);
    assert_eq!(out.code, 0);
    assert_eq!(out.json()["count"], 1);
    assert_eq!(std::fs::read(&snap).unwrap(), std::fs::read(data.join("live/model.ndjson")).unwrap());

    let dedup = oc(&["--data-dir", d, "--format", "json", "dedup", slam]);
    assert_eq!(dedup.code, 0);
    assert!(dedup.json()["matches"].as_array().unwrap().is_empty());
}

#[test]
fn blocked_review_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let svc = offline_service(&data);
    add_accounts(&svc);
    let draft = oc_catalog::workflow::draft_from_json(
        &json!({
            "catalog": "model",
            "title": "Closed Model",
            "contributors": [{"name": "Corp"}],
            "license": "proprietary",
            "access_url": "https://corp.example.com/model"
        }),
        "alice",
    )
    .unwrap();
    let id = svc.submit(draft, Some(&contributor(&svc))).unwrap().id;
    drop(svc);
    let out = oc(&["--data-dir", s(&data), "--format", "json", "review", id.as_str(), "--approve", "--curator", "cur"]);
    assert_eq!(out.code, 3);
    assert_eq!(out.json()["state"], "pending_review");
}

#[test]
fn offline_commands_open_no_sockets() {
    let stub = StubServer::start(0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let source = dir.path().join("live.json");
    std::fs::write(
        &source,
        json!({"name": "live", "kind": "code_host", "base_url": stub.url("/"), "query": "construction", "page_size": 10}).to_string(),
    )
    .unwrap();
    let h = oc(&["--data-dir", s(&data), "--offline", "--format", "json", "harvest", "--source", s(&source), "--profile", &profile()]);
    assert_eq!(h.code, 1);
    assert_eq!(h.json()["aborted"], true);

    let file = dir.path().join("entry.json");
    std::fs::write(
        &file,
        json!({"catalog": "dataset", "title": "T", "contributors": [{"name": "A"}], "license": "MIT", "access_url": stub.url("/ok")})
            .to_string(),
    )
    .unwrap();
    let v = oc_env(&["--data-dir", s(&data), "--format", "json", "validate", s(&file)], &[("OC_OFFLINE", "1")]);
    assert_eq!(v.code, 0, "{}", v.stdout);
    assert_eq!(v.json()["link"]["outcome"], "skipped_offline");
    assert_eq!(stub.connections(), 0);
}

#[test]
fn online_validate_reports_broken_links() {
    let stub = StubServer::start(0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("entry.json");
    std::fs::write(
        &file,
        json!({"catalog": "dataset", "title": "T", "contributors": [{"name": "A"}], "license": "MIT", "access_url": stub.url("/gone")})
            .to_string(),
    )
    .unwrap();
    let v = oc(&["--data-dir", s(&dir.path().join("d")), "--format", "json", "validate", s(&file)]);
    assert_eq!(v.code, 3);
    assert_eq!(v.json()["link"]["outcome"], "broken");
    assert!(stub.connections() >= 1);
}

#[test]
fn json_mode_prints_one_document_per_command() {
    let dir = tempfile::tempdir().unwrap();
    let data = seeded(dir.path());
    let snap = dir.path().join("oer.ndjson");
    let seed_out = dir.path().join("seed");
    let cases: Vec<Vec<&str>> = vec![
        vec!["search", "crack detection"],
        vec!["search", "", "--filter", "task=slam", "--limit", "3"],
        vec!["stats", "--dimension", "task"],
        vec!["publish-snapshot", "--catalog", "oer", "--out", s(&snap)],
        vec!["seed-fixture", "--out", s(&seed_out)],
        vec!["add-account", "--id", "bob", "--role", "contributor", "--token", "bob-token-123"],
    ];
    for case in cases {
        let mut args = vec!["--data-dir", &data, "--offline", "--format", "json"];
        args.extend(case.iter());
        let out = oc(&args);
        assert_eq!(out.code, 0, "{case:?}: {}", out.stderr);
        assert_eq!(out.stdout.lines().count(), 1, "{case:?}");
        out.json();
    }
}
