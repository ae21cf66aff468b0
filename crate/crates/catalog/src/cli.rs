//! The `oc` command line.
//!
//! [`run`] takes its streams and environment as arguments so tests can
//! drive it in-process. Exit codes: 0 ok, 1 operational failure, 2 usage,
//! 3 content failed validation.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oc_core::json::to_canonical_string;
use oc_core::pipeline::dedup::DuplicateMatch;
use oc_core::pipeline::validate::{Finding, Severity, ValidationReport};
use oc_core::pipeline::{Decision, Role};
use oc_core::query::{Facet, FacetFilter, QuerySpec};
use oc_core::seed::seed_fixture_files;
use oc_core::{parse_entry, Catalog, CatalogEntry, PersistentId, SchemaError};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::accounts::Account;
use crate::api::{add_facet_term, search_body, stats_body, Api};
use crate::clock::SystemClock;
use crate::config::{FileConfig, Framing, OutputFormat, Overrides, Settings, DEFAULT_CONFIG_FILE};
use crate::connectors::{Connector, SourceConfig, UreqTransport};
use crate::linkcheck::{LinkCheckConfig, LinkChecker};
use crate::mcp::McpServer;
use crate::store::FileStore;
use crate::workflow::{CatalogService, WorkflowError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVALID: i32 = 3;

const HTTP_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Parser)]
#[command(name = "oc", version, about = "Harvest, curate, publish and serve open catalog metadata")]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Configuration file (default: ./oc.toml when present)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Store directory [env: OC_DATA_DIR]
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Publish policy JSON
    #[arg(long, global = true, value_name = "PATH")]
    policy: Option<PathBuf>,
    /// Directory of mapping profiles
    #[arg(long, global = true, value_name = "DIR")]
    profiles_dir: Option<PathBuf>,
    /// Directory of controlled vocabularies
    #[arg(long, global = true, value_name = "DIR")]
    vocab_dir: Option<PathBuf>,
    /// Never open network connections [env: OC_OFFLINE]
    #[arg(long, global = true)]
    offline: bool,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FramingArg {
    Ndjson,
    ContentLength,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoleArg {
    Contributor,
    Curator,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fetch records from a source, normalize, validate and queue them for review
    Harvest {
        /// Source configuration JSON
        #[arg(long)]
        source: PathBuf,
        /// Mapping profile name or path
        #[arg(long)]
        profile: String,
    },
    /// Validate a stored entry (recording the result) or an entry file; exits 3 on errors
    Validate { target: String },
    /// List likely duplicates of a stored entry or an entry file
    Dedup { target: String },
    /// Record a curator decision on a pending submission
    Review {
        /// Submission id
        submission: String,
        #[arg(long, group = "decision")]
        approve: bool,
        #[arg(long, group = "decision")]
        reject: bool,
        #[arg(long, group = "decision")]
        request_changes: bool,
        /// Curator account id
        #[arg(long)]
        curator: String,
        #[arg(long, default_value = "")]
        rationale: String,
    },
    /// Withdraw a published entry
    Retract {
        id: String,
        #[arg(long)]
        curator: String,
        #[arg(long, default_value = "")]
        rationale: String,
    },
    /// Write the live snapshot of one catalog
    PublishSnapshot {
        #[arg(long)]
        catalog: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count published entries per term of a dimension
    Stats {
        #[arg(long)]
        dimension: String,
        /// Facet filter, repeatable
        #[arg(long, value_name = "KEY=VALUE")]
        filter: Vec<String>,
    },
    /// Keyword search over published entries
    Search {
        #[arg(default_value = "")]
        text: String,
        #[arg(long, value_name = "KEY=VALUE")]
        filter: Vec<String>,
        #[arg(long, default_value_t = 0)]
        offset: usize,
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
    /// Write the deterministic seed catalog files
    SeedFixture {
        #[arg(long)]
        out: PathBuf,
    },
    /// Publish curated entries from NDJSON files or directories of them
    Import {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Create or replace an account; prints a generated token when none is given
    AddAccount {
        #[arg(long)]
        id: String,
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long)]
        token: Option<String>,
    },
    /// Run the HTTP API
    Serve {
        /// Listen address (default 127.0.0.1:8080)
        #[arg(long)]
        addr: Option<String>,
        /// Origin allowed by CORS, e.g. the portal's dev server
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Run the MCP server on stdin/stdout
    McpServe {
        /// Message framing on stdio (default ndjson)
        #[arg(long, value_enum)]
        mcp_framing: Option<FramingArg>,
    },
}

enum Failure {
    Usage(String),
    Operational(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Operational(e.to_string())
    }
}

/// What a command produced: a JSON document, its table rendering, and
/// the exit code.
struct Output {
    doc: Value,
    table: String,
    code: i32,
}

impl Output {
    fn ok(doc: Value, table: String) -> Self {
        Output { doc, table, code: EXIT_OK }
    }
}

struct Ctx<'a> {
    settings: Settings,
    stdin: &'a mut dyn BufRead,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn note(&mut self, msg: &str) {
        let _ = writeln!(self.stderr, "{msg}");
    }
}

pub fn run<I, T>(
    args: I,
    env: &dyn Fn(&str) -> Option<String>,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let json_requested = wants_json(&args);
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let _ = write!(stderr, "{}", e.render());
            if json_requested {
                emit_error(stdout, "usage", &e.kind().to_string());
            }
            return EXIT_USAGE;
        }
    };

    let settings = match load_settings(&cli.global, &cli.command, env) {
        Ok(s) => s,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            if json_requested {
                emit_error(stdout, "usage", &msg);
            }
            return EXIT_USAGE;
        }
    };
    let format = settings.format;
    let mut ctx = Ctx { settings, stdin, stdout, stderr };
    match dispatch(cli.command, &mut ctx) {
        Ok(None) => EXIT_OK,
        Ok(Some(out)) => {
            match format {
                OutputFormat::Json => {
                    let _ = writeln!(ctx.stdout, "{}", to_canonical_string(&out.doc));
                }
                OutputFormat::Table => {
                    let _ = write!(ctx.stdout, "{}", out.table);
                }
            }
            out.code
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(ctx.stderr, "error: {msg}\n\n{}", synopsis());
            if format == OutputFormat::Json {
                emit_error(ctx.stdout, "usage", &msg);
            }
            EXIT_USAGE
        }
        Err(Failure::Operational(msg)) => {
            let _ = writeln!(ctx.stderr, "error: {msg}");
            if format == OutputFormat::Json {
                emit_error(ctx.stdout, "failure", &msg);
            }
            EXIT_FAILURE
        }
    }
}

fn synopsis() -> String {
    <Cli as clap::CommandFactory>::command().render_usage().to_string()
}

fn wants_json(args: &[std::ffi::OsString]) -> bool {
    args.windows(2).any(|w| w[0] == "--format" && w[1] == "json") || args.iter().any(|a| a == "--format=json")
}

fn emit_error(out: &mut dyn Write, code: &str, message: &str) {
    let _ = writeln!(out, "{}", to_canonical_string(&json!({ "error": { "code": code, "message": message } })));
}

fn load_settings(g: &GlobalArgs, cmd: &Command, env: &dyn Fn(&str) -> Option<String>) -> Result<Settings, String> {
    let file = match &g.config {
        Some(p) => FileConfig::load(p).map_err(|e| e.to_string())?,
        None if Path::new(DEFAULT_CONFIG_FILE).is_file() => {
            FileConfig::load(Path::new(DEFAULT_CONFIG_FILE)).map_err(|e| e.to_string())?
        }
        None => FileConfig::default(),
    };
    let mut flags = Overrides {
        data_dir: g.data_dir.clone(),
        policy: g.policy.clone(),
        profiles: g.profiles_dir.clone(),
        vocab: g.vocab_dir.clone(),
        offline: g.offline,
        format: g.format.map(|f| match f {
            FormatArg::Table => OutputFormat::Table,
            FormatArg::Json => OutputFormat::Json,
        }),
        ..Overrides::default()
    };
    match cmd {
        Command::Serve { addr, cors_origin } => {
            flags.addr = addr.clone();
            flags.cors_origin = cors_origin.clone();
        }
        Command::McpServe { mcp_framing } => {
            flags.mcp_framing = mcp_framing.map(|f| match f {
                FramingArg::Ndjson => Framing::Ndjson,
                FramingArg::ContentLength => Framing::ContentLength,
            });
        }
        _ => {}
    }
    Settings::resolve(&flags, &file, env).map_err(|e| e.to_string())
}

fn open_service(s: &Settings) -> Result<CatalogService, Failure> {
    let policy = s.policy().map_err(|e| Failure::Usage(e.to_string()))?;
    let vocabs = s.vocabularies().map_err(|e| Failure::Usage(e.to_string()))?;
    let clock = Arc::new(SystemClock);
    let store = FileStore::open_with_clock(&s.data_dir, clock.clone())?;
    let cfg = if s.offline { LinkCheckConfig::offline() } else { LinkCheckConfig::default() };
    let links = LinkChecker::http(cfg, clock);
    Ok(CatalogService::new(store, policy, vocabs, links)?)
}

fn dispatch(cmd: Command, ctx: &mut Ctx<'_>) -> Result<Option<Output>, Failure> {
    match cmd {
        Command::SeedFixture { out } => seed_fixture(&out).map(Some),
        Command::Serve { .. } => serve(ctx).map(|_| None),
        Command::McpServe { .. } => mcp_serve(ctx).map(|_| None),
        other => {
            let svc = open_service(&ctx.settings)?;
            run_with_service(other, &svc, ctx).map(Some)
        }
    }
}

fn run_with_service(cmd: Command, svc: &CatalogService, ctx: &mut Ctx<'_>) -> Result<Output, Failure> {
    match cmd {
        Command::Harvest { source, profile } => harvest(svc, ctx, &source, &profile),
        Command::Validate { target } => validate(svc, &target),
        Command::Dedup { target } => dedup(svc, &target),
        Command::Review { submission, approve, reject, request_changes, curator, rationale } => {
            let decision = match (approve, reject, request_changes) {
                (true, _, _) => Decision::Approve,
                (_, true, _) => Decision::Reject,
                (_, _, true) => Decision::RequestChanges,
                _ => return Err(Failure::Usage("one of --approve, --reject or --request-changes is required".into())),
            };
            review(svc, &submission, decision, &curator, &rationale)
        }
        Command::Retract { id, curator, rationale } => {
            let who = curator_account(svc, &curator)?;
            let state = svc.retract(&id, &rationale, Some(&who)).map_err(workflow_failure)?;
            Ok(Output::ok(json!({ "id": id, "state": state.as_str() }), format!("{id}: {state}\n")))
        }
        Command::PublishSnapshot { catalog, out } => {
            let c = Catalog::parse(&catalog).ok_or_else(|| Failure::Usage(format!("unknown catalog `{catalog}`")))?;
            let summary = svc.store().snapshot_live(c, &out)?;
            let table = format!("{} entries of {} written to {}\n", summary.count, summary.catalog, out.display());
            Ok(Output::ok(to_json(&summary), table))
        }
        Command::Stats { dimension, filter } => {
            let filters = parse_filters(&filter)?;
            let agg = svc.aggregate(&dimension, &filters).map_err(|e| Failure::Usage(e.to_string()))?;
            let mut rows: Vec<(&String, &usize)> = agg.counts.iter().collect();
            rows.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
            let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max(agg.dimension.len());
            let mut table = format!("{:<width$}  count\n", agg.dimension);
            for (term, n) in rows {
                let _ = writeln!(table, "{term:<width$}  {n:>5}");
            }
            let _ = writeln!(table, "{:<width$}  {:>5}", "(entries)", agg.total);
            Ok(Output::ok(stats_body(&agg), table))
        }
        Command::Search { text, filter, offset, limit } => {
            let spec = QuerySpec { text, facets: parse_filters(&filter)?, offset, limit };
            let page = svc.search(&spec);
            let mut table = String::new();
            for (i, h) in page.hits.iter().enumerate() {
                let _ = writeln!(table, "{:>3}  {:>7.3}  {}  {}", offset + i + 1, h.score, h.id, h.title);
            }
            let _ = writeln!(table, "{} of {} matches", page.hits.len(), page.total);
            Ok(Output::ok(search_body(&page), table))
        }
        Command::Import { paths } => import(svc, &paths),
        Command::AddAccount { id, role, token } => {
            let role = match role {
                RoleArg::Contributor => Role::Contributor,
                RoleArg::Curator => Role::Curator,
            };
            let (token, generated) = match token {
                Some(t) => (t, false),
                None => (generate_token(), true),
            };
            let account = Account::new(&id, role, &token).map_err(|e| Failure::Usage(e.to_string()))?;
            svc.add_account(account).map_err(workflow_failure)?;
            let mut doc = json!({ "id": id, "role": role });
            let mut table = format!("account {id} saved\n");
            if generated {
                doc["token"] = Value::String(token.clone());
                let _ = writeln!(table, "token: {token}");
            }
            ctx.note("tokens are stored hashed; keep the token somewhere safe");
            Ok(Output::ok(doc, table))
        }
        Command::SeedFixture { .. } | Command::Serve { .. } | Command::McpServe { .. } => {
            unreachable!("handled before the service is opened")
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

fn generate_token() -> String {
    use rand::Rng;
    let bytes: [u8; 24] = rand::rng().random();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn workflow_failure(e: WorkflowError) -> Failure {
    Failure::Operational(e.to_string())
}

fn curator_account(svc: &CatalogService, id: &str) -> Result<Account, Failure> {
    svc.account(id).ok_or_else(|| Failure::Operational(format!("no account `{id}`")))
}

fn parse_filters(raw: &[String]) -> Result<FacetFilter, Failure> {
    let mut filters = FacetFilter::new();
    for f in raw {
        let (k, v) = f.split_once('=').ok_or_else(|| Failure::Usage(format!("filter `{f}` is not KEY=VALUE")))?;
        let facet = Facet::parse(k).ok_or_else(|| Failure::Usage(format!("unknown filter key `{k}`")))?;
        add_facet_term(&mut filters, facet, v);
    }
    Ok(filters)
}

fn seed_fixture(out: &Path) -> Result<Output, Failure> {
    fs::create_dir_all(out)?;
    let mut files = Map::new();
    let mut table = String::new();
    for (catalog, body) in seed_fixture_files() {
        let name = format!("{}.ndjson", catalog.as_str());
        fs::write(out.join(&name), body.as_bytes())?;
        let lines = body.lines().count();
        let _ = writeln!(table, "{name}: {lines} entries");
        files.insert(name, Value::from(lines));
    }
    Ok(Output::ok(json!({ "out": out.display().to_string(), "files": files }), table))
}

fn harvest(svc: &CatalogService, ctx: &mut Ctx<'_>, source: &Path, profile: &str) -> Result<Output, Failure> {
    let config = SourceConfig::load(source).map_err(|e| Failure::Usage(e.to_string()))?;
    let profile = ctx.settings.profile(profile).map_err(|e| Failure::Usage(e.to_string()))?;
    let transport = Arc::new(UreqTransport::new(HTTP_TIMEOUT));
    let connector = Connector::new(config, transport, ctx.settings.offline, Arc::new(SystemClock))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let summary = svc.run_pipeline(&connector, &profile);
    let mut table = format!(
        "fetched {}  normalized {}  failed {}  duplicates {}  needs review {}  queued {}  already stored {}\n",
        summary.fetched,
        summary.normalized,
        summary.failed_normalize,
        summary.duplicates,
        summary.needs_review,
        summary.queued,
        summary.skipped_existing
    );
    let code = if summary.aborted {
        let msg = summary.error.clone().unwrap_or_default();
        let _ = writeln!(table, "aborted: {msg}");
        ctx.note(&format!("harvest aborted: {msg}"));
        EXIT_FAILURE
    } else {
        EXIT_OK
    };
    Ok(Output { doc: to_json(&summary), table, code })
}

enum Target {
    Stored(PersistentId),
    File(PathBuf),
}

fn target(raw: &str) -> Result<Target, Failure> {
    let path = Path::new(raw);
    if path.is_file() {
        return Ok(Target::File(path.to_path_buf()));
    }
    PersistentId::parse(raw)
        .map(Target::Stored)
        .ok_or_else(|| Failure::Usage(format!("`{raw}` is neither a file nor an entry id")))
}

/// Reads an entry file, filling keys a hand-written draft may lack so
/// validation can report on them instead of rejecting the file outright.
fn entry_from_file(path: &Path) -> Result<Result<CatalogEntry, SchemaError>, Failure> {
    let bytes = fs::read(path)?;
    let value: Value = match serde_json::from_slice(&bytes) {
        Ok(v) => v,
        Err(e) => return Ok(Err(SchemaError::MalformedJson(e.to_string()))),
    };
    let Value::Object(mut obj) = value else {
        return Ok(Err(SchemaError::TypeMismatch { key: "$".into(), expected: "object" }));
    };
    let tag = obj.get("catalog").and_then(Value::as_str).and_then(Catalog::parse).map_or("ds", |c| c.id_tag());
    obj.entry("id").or_insert_with(|| Value::String(format!("oc-{tag}-draft-00000000")));
    obj.entry("state").or_insert_with(|| Value::String("draft".into()));
    for key in ["title", "license", "access_url"] {
        obj.entry(key).or_insert_with(|| Value::String(String::new()));
    }
    obj.entry("contributors").or_insert_with(|| json!([]));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    obj.entry("source").or_insert_with(|| json!({ "repository": "local", "record_id": name }));
    Ok(CatalogEntry::from_value(&Value::Object(obj)))
}

fn schema_report(entry_id: &str, e: &SchemaError, svc: &CatalogService) -> ValidationReport {
    let field = match e {
        SchemaError::MissingRequiredKey(k) | SchemaError::TypeMismatch { key: k, .. } => k.clone(),
        _ => "$".into(),
    };
    ValidationReport {
        entry_id: entry_id.into(),
        findings: vec![Finding::error("schema_invalid", &field, e.to_string())],
        checked_at: svc.store().now(),
        link: None,
    }
}

fn report_table(r: &ValidationReport) -> String {
    let mut t = String::new();
    for f in &r.findings {
        let sev = match f.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let _ = writeln!(t, "{sev:<8} {:<26} {:<14} {}", f.code, f.field, f.message);
    }
    let warnings = r.findings.len() - r.error_count();
    let _ = writeln!(t, "{}: {} errors, {} warnings", r.entry_id, r.error_count(), warnings);
    t
}

fn report_output(r: ValidationReport) -> Output {
    let code = if r.is_publishable() { EXIT_OK } else { EXIT_INVALID };
    Output { table: report_table(&r), doc: to_json(&r), code }
}

fn validate(svc: &CatalogService, raw: &str) -> Result<Output, Failure> {
    match target(raw)? {
        Target::Stored(id) => {
            let report = svc.revalidate(id.as_str(), "cli:validate").map_err(workflow_failure)?;
            Ok(report_output(report))
        }
        Target::File(path) => match entry_from_file(&path)? {
            Ok(entry) => Ok(report_output(svc.validate(&entry))),
            Err(e) => Ok(report_output(schema_report(raw, &e, svc))),
        },
    }
}

fn dedup(svc: &CatalogService, raw: &str) -> Result<Output, Failure> {
    let entry = match target(raw)? {
        Target::Stored(id) => svc.store().entry(&id).map_err(|e| Failure::Operational(e.to_string()))?,
        Target::File(path) => entry_from_file(&path)?.map_err(|e| Failure::Operational(e.to_string()))?,
    };
    let matches: Vec<DuplicateMatch> = svc.duplicates(&entry).into_iter().filter(|m| m.candidate != entry.id).collect();
    let mut table = String::new();
    for m in &matches {
        let evidence: Vec<String> = m.evidence.iter().map(|e| to_json(e).as_str().unwrap_or_default().to_string()).collect();
        let _ = writeln!(
            table,
            "{}  {}  title {:.2}  contributors {:.2}  [{}]",
            m.candidate,
            to_json(&m.verdict).as_str().unwrap_or_default(),
            m.title_similarity,
            m.contributor_jaccard,
            evidence.join(", ")
        );
    }
    let _ = writeln!(table, "{} candidate duplicates", matches.len());
    Ok(Output::ok(json!({ "entry_id": entry.id.as_str(), "matches": matches }), table))
}

fn review(svc: &CatalogService, id: &str, decision: Decision, curator: &str, rationale: &str) -> Result<Output, Failure> {
    let who = curator_account(svc, curator)?;
    match svc.review(id, decision, rationale, Some(&who)) {
        Ok(state) => Ok(Output::ok(json!({ "id": id, "state": state.as_str() }), format!("{id}: {state}\n"))),
        Err(WorkflowError::BlockedByErrors(report)) => {
            let mut out = report_output(*report);
            out.doc = json!({ "id": id, "state": "pending_review", "blocked_by": out.doc });
            out.table.push_str("approval blocked; entry stays pending\n");
            Ok(out)
        }
        Err(e) => Err(workflow_failure(e)),
    }
}

fn ndjson_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "ndjson"))
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(Failure::Usage(format!("{} does not exist", p.display())));
        }
    }
    Ok(files)
}

fn import(svc: &CatalogService, paths: &[PathBuf]) -> Result<Output, Failure> {
    let mut entries = Vec::new();
    for file in ndjson_files(paths)? {
        let text = fs::read_to_string(&file)?;
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let entry = parse_entry(line.as_bytes())
                .map_err(|e| Failure::Operational(format!("{}:{}: {e}", file.display(), n + 1)))?;
            entries.push(entry);
        }
    }
    let summary = svc.import_published(&entries, "cli:import").map_err(workflow_failure)?;
    let mut table = format!(
        "imported {}  already stored {}  rejected {}\n",
        summary.imported,
        summary.skipped_existing,
        summary.rejected.len()
    );
    for (id, codes) in &summary.rejected {
        let _ = writeln!(table, "rejected {id}: {}", codes.join(", "));
    }
    let code = if summary.rejected.is_empty() { EXIT_OK } else { EXIT_INVALID };
    Ok(Output { doc: to_json(&summary), table, code })
}

fn serve(ctx: &mut Ctx<'_>) -> Result<(), Failure> {
    let svc = Arc::new(open_service(&ctx.settings)?);
    let addr: SocketAddr = ctx
        .settings
        .addr
        .parse()
        .map_err(|_| Failure::Usage(format!("`{}` is not a socket address", ctx.settings.addr)))?;
    let api = Arc::new(Api::new(svc).with_cors_origin(ctx.settings.cors_origin.clone()));
    let rt = tokio::runtime::Runtime::new()?;
    ctx.note(&format!("serving on http://{addr}"));
    rt.block_on(crate::http::serve(api, addr))?;
    Ok(())
}

fn mcp_serve(ctx: &mut Ctx<'_>) -> Result<(), Failure> {
    let svc = Arc::new(open_service(&ctx.settings)?);
    let server = McpServer::new(svc);
    let framing = ctx.settings.mcp_framing;
    server.serve(&mut ctx.stdin, &mut ctx.stdout, framing)?;
    Ok(())
}
