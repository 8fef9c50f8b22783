//! Content-addressed store of heat-trace estimates, one file per cell.
//!
//! Layout: `<dir>/entries/<sha256>.json` plus an append-only `<dir>/manifest.jsonl`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use doslab::dos::{CellKey, TraceCache};
use doslab::HeatTraceEstimate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

const HASH_DOMAIN: &str = "doslab-cache-v1\n";
const TMP_PREFIX: &str = ".tmp-";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CellKey,
    pub estimate: HeatTraceEstimate,
    /// Seconds since the Unix epoch.
    pub created: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestLine {
    hash: String,
    created: u64,
}

pub fn key_hash(key: &CellKey) -> String {
    let mut h = Sha256::new();
    h.update(HASH_DOMAIN);
    h.update(serde_json::to_vec(key).expect("cell key serializes"));
    hex::encode(h.finalize())
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub struct DiskCache {
    dir: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
    writes: AtomicUsize,
    manifest: Mutex<()>,
}

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> CliResult<Self> {
        let dir = dir.into();
        let entries = dir.join("entries");
        fs::create_dir_all(&entries).map_err(|e| CliError::io(&entries, e))?;
        Ok(Self {
            dir,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            writes: AtomicUsize::new(0),
            manifest: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    fn entry_path(&self, hash: &str) -> PathBuf {
        self.dir.join("entries").join(format!("{hash}.json"))
    }

    fn read(&self, key: &CellKey) -> Option<HeatTraceEstimate> {
        let text = fs::read_to_string(self.entry_path(&key_hash(key))).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.key == *key).then_some(entry.estimate)
    }

    fn write(&self, key: &CellKey, estimate: &HeatTraceEstimate) -> std::io::Result<()> {
        let hash = key_hash(key);
        let created = now_unix();
        let entry = CacheEntry { key: key.clone(), estimate: estimate.clone(), created };
        let body = serde_json::to_vec_pretty(&entry).expect("cache entry serializes");
        let n = self.writes.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join("entries").join(format!("{TMP_PREFIX}{hash}-{}-{n}", std::process::id()));
        fs::write(&tmp, body)?;
        fs::rename(&tmp, self.entry_path(&hash))?;
        let _guard = self.manifest.lock().unwrap_or_else(|e| e.into_inner());
        let mut m = OpenOptions::new().create(true).append(true).open(self.dir.join("manifest.jsonl"))?;
        let line = serde_json::to_string(&ManifestLine { hash, created }).expect("manifest line serializes");
        writeln!(m, "{line}")
    }
}

impl TraceCache for DiskCache {
    fn get(&self, key: &CellKey) -> Option<HeatTraceEstimate> {
        let found = self.read(key);
        let counter = if found.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        found
    }

    /// Best effort: a failed write only costs a recomputation later.
    fn put(&self, key: &CellKey, estimate: &HeatTraceEstimate) {
        if let Err(e) = self.write(key, estimate) {
            eprintln!("warning: cache write failed in {}: {e}", self.dir.display());
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GcSummary {
    pub kept: usize,
    pub removed: usize,
    pub temporaries: usize,
}

/// Drops unreadable, mis-addressed and half-written entries, then rewrites the
/// manifest to list exactly the surviving entries.
pub fn gc(dir: &Path) -> CliResult<GcSummary> {
    let entries = dir.join("entries");
    let mut summary = GcSummary::default();
    let mut kept: Vec<ManifestLine> = Vec::new();
    let listing = match fs::read_dir(&entries) {
        Ok(l) => l,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(summary),
        Err(e) => return Err(CliError::io(&entries, e)),
    };
    for item in listing {
        let path = item.map_err(|e| CliError::io(&entries, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        if name.starts_with(TMP_PREFIX) {
            fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
            summary.temporaries += 1;
            continue;
        }
        let valid = fs::read_to_string(&path)
            .ok()
            .and_then(|text| serde_json::from_str::<CacheEntry>(&text).ok())
            .filter(|entry| name == format!("{}.json", key_hash(&entry.key)));
        match valid {
            Some(entry) => {
                kept.push(ManifestLine { hash: key_hash(&entry.key), created: entry.created });
                summary.kept += 1;
            }
            None => {
                fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
                summary.removed += 1;
            }
        }
    }
    kept.sort_by(|a, b| a.hash.cmp(&b.hash));
    let manifest = dir.join("manifest.jsonl");
    let tmp = dir.join(format!("{TMP_PREFIX}manifest-{}", std::process::id()));
    let body: String = kept
        .iter()
        .map(|l| serde_json::to_string(l).expect("manifest line serializes") + "\n")
        .collect();
    fs::write(&tmp, body).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, &manifest).map_err(|e| CliError::io(&manifest, e))?;
    Ok(summary)
}
