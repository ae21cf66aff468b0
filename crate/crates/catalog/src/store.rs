//! File-backed event store.
//!
//! Layout under the data directory:
//!
//! ```text
//! log/<id>.ndjson      provenance events, one canonical JSON object per line
//! live/<catalog>.ndjson published entries, sorted by id
//! accounts.json        contributor and curator accounts
//! ```
//!
//! Logs are only ever appended to. The materialized state of every entry is
//! cached in memory and rebuilt from the logs on open.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, RwLock, TryLockError};

use oc_core::provenance::{materialize, FoldError, Materialized, NewEvent, ProvenanceEvent};
use oc_core::seed::to_ndjson;
use oc_core::{Catalog, CatalogEntry, EntryState, PersistentId, Timestamp};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::clock::{Clock, SystemClock};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage failure: {0}")]
    Io(#[from] io::Error),
    #[error("another writer holds the store")]
    Conflict,
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("log for {id} is corrupt: {reason}")]
    Corrupt { id: String, reason: String },
    #[error("event rejected for {id}: {source}")]
    Rejected {
        id: String,
        #[source]
        source: FoldError,
    },
    #[error("{0} has no entry content yet")]
    Incomplete(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EntryFilter {
    pub catalog: Option<Catalog>,
    pub state: Option<EntryState>,
}

impl EntryFilter {
    pub fn published() -> Self {
        EntryFilter { catalog: None, state: Some(EntryState::Published) }
    }

    fn matches(&self, e: &CatalogEntry) -> bool {
        self.catalog.is_none_or(|c| c == e.catalog) && self.state.is_none_or(|s| s == e.state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryPage {
    pub items: Vec<CatalogEntry>,
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LiveCatalogSummary {
    pub catalog: Catalog,
    pub count: usize,
    pub generated_at: Timestamp,
    pub path: String,
}

#[derive(Debug, Default)]
struct Record {
    events: Vec<ProvenanceEvent>,
    current: Option<Materialized>,
    /// Log length in bytes as last read or written by this process.
    bytes: u64,
}

pub struct FileStore {
    root: PathBuf,
    records: RwLock<BTreeMap<PersistentId, Record>>,
    writer: Mutex<()>,
    clock: Arc<dyn Clock>,
}

impl std::fmt::Debug for FileStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FileStore").field("root", &self.root).finish_non_exhaustive()
    }
}

impl FileStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        Self::open_with_clock(root, Arc::new(SystemClock))
    }

    /// Opens (creating if needed) the store at `root` and replays every log.
    pub fn open_with_clock(root: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("log"))?;
        fs::create_dir_all(root.join("live"))?;
        let mut records = BTreeMap::new();
        for (id, path, _) in scan_logs(&root)? {
            let record = load_log(&path, &id)?;
            records.insert(id, record);
        }
        Ok(FileStore { root, records: RwLock::new(records), writer: Mutex::new(()), clock })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn log_path(&self, id: &PersistentId) -> PathBuf {
        self.root.join("log").join(format!("{}.ndjson", id.as_str()))
    }

    pub fn live_path(&self, catalog: Catalog) -> PathBuf {
        self.root.join("live").join(format!("{}.ndjson", catalog.as_str()))
    }

    pub fn accounts_path(&self) -> PathBuf {
        self.root.join("accounts.json")
    }

    pub fn now(&self) -> Timestamp {
        self.clock.now()
    }

    /// Claims the single writer slot. A second concurrent claim, from this
    /// process or another one sharing the directory, fails with
    /// [`StoreError::Conflict`] instead of blocking. Logs written by other
    /// processes since the last claim are reloaded first.
    pub fn begin_write(&self) -> Result<StoreWriter<'_>, StoreError> {
        let guard = match self.writer.try_lock() {
            Ok(g) => g,
            Err(TryLockError::WouldBlock) => return Err(StoreError::Conflict),
            Err(TryLockError::Poisoned(p)) => p.into_inner(),
        };
        let lock = OpenOptions::new().create(true).truncate(false).write(true).open(self.root.join("writer.lock"))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Conflict),
            Err(fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        let refreshed = self.refresh()?;
        Ok(StoreWriter { store: self, _guard: guard, _lock: lock, refreshed })
    }

    /// Reloads logs that grew or appeared on disk since this process last
    /// saw them. Returns whether anything changed.
    pub fn refresh(&self) -> Result<bool, StoreError> {
        let mut changed = Vec::new();
        {
            let records = self.read();
            for (id, path, len) in scan_logs(&self.root)? {
                if records.get(&id).is_none_or(|r| r.bytes != len) {
                    changed.push((id, path));
                }
            }
        }
        if changed.is_empty() {
            return Ok(false);
        }
        let mut fresh = Vec::new();
        for (id, path) in changed {
            fresh.push((id.clone(), load_log(&path, &id)?));
        }
        let mut records = self.records.write().unwrap_or_else(|p| p.into_inner());
        records.extend(fresh);
        Ok(true)
    }

    /// Appends one event under a short-lived writer claim.
    pub fn append_event(&self, id: &PersistentId, event: NewEvent) -> Result<u64, StoreError> {
        self.begin_write()?.append(id, event)
    }

    pub fn contains(&self, id: &PersistentId) -> bool {
        self.read().contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ids(&self) -> Vec<PersistentId> {
        self.read().keys().cloned().collect()
    }

    pub fn events(&self, id: &PersistentId) -> Result<Vec<ProvenanceEvent>, StoreError> {
        self.read().get(id).map(|r| r.events.clone()).ok_or_else(|| StoreError::UnknownId(id.as_str().into()))
    }

    pub fn materialize(&self, id: &PersistentId) -> Result<Materialized, StoreError> {
        let records = self.read();
        let record = records.get(id).ok_or_else(|| StoreError::UnknownId(id.as_str().into()))?;
        record.current.clone().ok_or_else(|| StoreError::Incomplete(id.as_str().into()))
    }

    pub fn entry(&self, id: &PersistentId) -> Result<CatalogEntry, StoreError> {
        self.materialize(id).map(|m| m.entry)
    }

    /// Current entries matching `filter`, in id order.
    pub fn entries(&self, filter: &EntryFilter) -> Vec<CatalogEntry> {
        self.read()
            .values()
            .filter_map(|r| r.current.as_ref())
            .filter(|m| filter.matches(&m.entry))
            .map(|m| m.entry.clone())
            .collect()
    }

    pub fn list_entries(&self, filter: &EntryFilter, offset: usize, limit: usize) -> EntryPage {
        let all = self.entries(filter);
        let total = all.len();
        let items = all.into_iter().skip(offset).take(limit).collect();
        EntryPage { items, total, offset, limit }
    }

    pub fn published(&self, catalog: Option<Catalog>) -> Vec<CatalogEntry> {
        self.entries(&EntryFilter { catalog, state: Some(EntryState::Published) })
    }

    pub fn pending(&self) -> Vec<Materialized> {
        self.read()
            .values()
            .filter_map(|r| r.current.as_ref())
            .filter(|m| m.entry.state == EntryState::PendingReview)
            .cloned()
            .collect()
    }

    /// Writes every published entry of `catalog` to `dest` as sorted NDJSON.
    pub fn snapshot_live(&self, catalog: Catalog, dest: &Path) -> Result<LiveCatalogSummary, StoreError> {
        self.snapshot_live_with_hook(catalog, dest, |_| Ok(()))
    }

    /// Like [`snapshot_live`](Self::snapshot_live), running `before_rename`
    /// once the temporary file is durable. An error from the hook aborts the
    /// snapshot and leaves `dest` untouched.
    pub fn snapshot_live_with_hook(
        &self,
        catalog: Catalog,
        dest: &Path,
        before_rename: impl FnOnce(&Path) -> io::Result<()>,
    ) -> Result<LiveCatalogSummary, StoreError> {
        let entries = self.published(Some(catalog));
        let body = to_ndjson(&entries);
        write_atomic_with_hook(dest, body.as_bytes(), before_rename)?;
        Ok(LiveCatalogSummary {
            catalog,
            count: entries.len(),
            generated_at: self.clock.now(),
            path: dest.display().to_string(),
        })
    }

    /// Refreshes `live/<catalog>.ndjson`.
    pub fn sync_live(&self, catalog: Catalog) -> Result<LiveCatalogSummary, StoreError> {
        self.snapshot_live(catalog, &self.live_path(catalog))
    }

    pub fn sync_all_live(&self) -> Result<Vec<LiveCatalogSummary>, StoreError> {
        Catalog::ALL.iter().map(|c| self.sync_live(*c)).collect()
    }

    /// SHA-256 over every log file name and its bytes, in name order.
    pub fn log_digest(&self) -> Result<String, StoreError> {
        let mut paths: Vec<PathBuf> =
            fs::read_dir(self.root.join("log"))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        paths.sort();
        let mut h = Sha256::new();
        for p in paths {
            h.update(p.file_name().map(|n| n.as_encoded_bytes()).unwrap_or_default());
            h.update([0u8]);
            h.update(fs::read(&p)?);
            h.update([0u8]);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, BTreeMap<PersistentId, Record>> {
        self.records.read().unwrap_or_else(|p| p.into_inner())
    }
}

/// Exclusive write access to a [`FileStore`]; dropped to release.
pub struct StoreWriter<'a> {
    store: &'a FileStore,
    _guard: MutexGuard<'a, ()>,
    _lock: File,
    refreshed: bool,
}

impl StoreWriter<'_> {
    /// Whether claiming the slot picked up writes from another process.
    pub fn refreshed(&self) -> bool {
        self.refreshed
    }

    pub fn store(&self) -> &FileStore {
        self.store
    }

    /// Persists `event` as the next event of `id` and returns its seq. The
    /// line is fsynced before this returns. Events that would make the log
    /// unfoldable are refused.
    pub fn append(&self, id: &PersistentId, event: NewEvent) -> Result<u64, StoreError> {
        self.append_all(id, vec![event])
    }

    /// Appends several events with a single fsync; all or none are accepted.
    /// Returns the seq of the last one.
    pub fn append_all(&self, id: &PersistentId, batch: Vec<NewEvent>) -> Result<u64, StoreError> {
        let store = self.store;
        let mut events = store.read().get(id).map(|r| r.events.clone()).unwrap_or_default();
        let mut lines = String::new();
        for event in batch {
            let ev = event.sequenced(id.clone(), events.len() as u64 + 1);
            lines.push_str(&ev.to_canonical_line());
            lines.push('\n');
            events.push(ev);
        }
        let seq = events.len() as u64;
        let current = match materialize(&events) {
            Ok(m) => Some(m),
            Err(FoldError::NoEntry) => None,
            Err(source) => return Err(StoreError::Rejected { id: id.as_str().into(), source }),
        };

        let path = store.log_path(id);
        let fresh = !path.exists();
        let mut f = OpenOptions::new().create(true).append(true).open(&path)?;
        f.write_all(lines.as_bytes())?;
        f.sync_data()?;
        if fresh {
            sync_dir(&store.root.join("log"));
        }

        let mut records = store.records.write().unwrap_or_else(|p| p.into_inner());
        let bytes = records.get(id).map_or(0, |r| r.bytes) + lines.len() as u64;
        records.insert(id.clone(), Record { events, current, bytes });
        Ok(seq)
    }
}

fn load_log(path: &Path, id: &PersistentId) -> Result<Record, StoreError> {
    let corrupt = |reason: String| StoreError::Corrupt { id: id.as_str().into(), reason };
    let text = fs::read_to_string(path)?;
    if !text.is_empty() && !text.ends_with('\n') {
        return Err(corrupt("last line is incomplete".into()));
    }
    let mut events = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let ev: ProvenanceEvent =
            serde_json::from_str(line).map_err(|e| corrupt(format!("line {}: {e}", n + 1)))?;
        events.push(ev);
    }
    if events.is_empty() {
        return Err(corrupt("empty log".into()));
    }
    if events[0].entry_id != *id {
        return Err(corrupt("events belong to another id".into()));
    }
    let current = match materialize(&events) {
        Ok(m) => Some(m),
        Err(FoldError::NoEntry) => None,
        Err(e) => return Err(corrupt(e.to_string())),
    };
    Ok(Record { events, current, bytes: text.len() as u64 })
}

/// Every `<id>.ndjson` under `root/log` with its length, sorted by path.
fn scan_logs(root: &Path) -> Result<Vec<(PersistentId, PathBuf, u64)>, StoreError> {
    let mut out = Vec::new();
    for e in fs::read_dir(root.join("log"))? {
        let e = e?;
        let path = e.path();
        if path.extension().is_none_or(|x| x != "ndjson") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let id = PersistentId::parse(&stem)
            .ok_or_else(|| StoreError::Corrupt { id: stem.clone(), reason: "file name is not an id".into() })?;
        out.push((id, path, e.metadata()?.len()));
    }
    out.sort_by(|a, b| a.1.cmp(&b.1));
    Ok(out)
}

/// Writes `bytes` to a sibling temp file, fsyncs it and renames it over `dest`.
pub fn write_atomic(dest: &Path, bytes: &[u8]) -> io::Result<()> {
    write_atomic_with_hook(dest, bytes, |_| Ok(()))
}

fn write_atomic_with_hook(
    dest: &Path,
    bytes: &[u8],
    before_rename: impl FnOnce(&Path) -> io::Result<()>,
) -> io::Result<()> {
    let dir = dest.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = dest.file_name().and_then(|n| n.to_str()).unwrap_or("snapshot");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    before_rename(&tmp)?;
    fs::rename(&tmp, dest)?;
    sync_dir(dir);
    Ok(())
}

fn sync_dir(dir: &Path) {
    // not every platform lets a directory be opened for syncing
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}
