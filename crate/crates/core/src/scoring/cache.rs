use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use log::warn;
use serde::{Deserialize, Serialize};

use super::ScoreLevel;
use crate::{Error, Result};

/// One persisted score, one JSON object per line in the cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub value: ScoreLevel,
    pub model_id: String,
    pub created_utc: i64,
}

/// Content-keyed score cache, optionally backed by an append-only JSON Lines
/// file. Reads are concurrent; appends go through a single writer.
#[derive(Debug)]
pub struct ScoreCache {
    entries: RwLock<HashMap<String, ScoreLevel>>,
    writer: Option<Mutex<BufWriter<File>>>,
    path: Option<PathBuf>,
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        ScoreCache {
            entries: RwLock::new(HashMap::new()),
            writer: None,
            path: None,
        }
    }

    /// Loads `path` if it exists (later lines override earlier ones) and
    /// opens it for appending.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::file(path, e))?;
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::file(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(entry) => {
                        entries.insert(entry.key, entry.value);
                    }
                    Err(e) => warn!("{}:{}: skipping bad cache line: {e}", path.display(), n + 1),
                }
            }
        } else if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::file(path, e))?;
        Ok(ScoreCache {
            entries: RwLock::new(entries),
            writer: Some(Mutex::new(BufWriter::new(file))),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<ScoreLevel> {
        self.entries.read().expect("cache lock").get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `value` under `key` and returns the value now cached. If the
    /// key was filled concurrently, the earlier value is kept and returned.
    pub fn insert(&self, key: String, value: ScoreLevel, model_id: &str) -> Result<ScoreLevel> {
        let mut entries = self.entries.write().expect("cache lock");
        if let Some(existing) = entries.get(&key) {
            return Ok(*existing);
        }
        if let Some(writer) = &self.writer {
            let entry = CacheEntry {
                key: key.clone(),
                value,
                model_id: model_id.to_string(),
                created_utc: SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs() as i64)
                    .unwrap_or(0),
            };
            let line = serde_json::to_string(&entry).expect("cache entry serializes");
            let mut w = writer.lock().expect("cache writer");
            writeln!(w, "{line}")
                .and_then(|_| w.flush())
                .map_err(|e| Error::file(self.path.clone().unwrap_or_default(), e))?;
        }
        entries.insert(key, value);
        Ok(value)
    }
}
