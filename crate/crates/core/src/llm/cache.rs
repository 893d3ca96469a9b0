//! File-backed response cache: an append-only record of (key, reply) pairs
//! that makes live runs replayable offline. Concurrent readers share the
//! map; writes are serialized through a single appender.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{DecisionBackend, DecisionRequest, LlmError};

#[derive(Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    reply: String,
}

/// The cache key: a digest over (backend id, prompt, sorted choice set,
/// seed), so any change to the query invalidates the entry.
pub fn cache_key(backend_id: &str, req: &DecisionRequest<'_>) -> String {
    let mut sorted: Vec<&String> = req.valid_set.iter().collect();
    sorted.sort();
    let canonical = serde_json::to_string(&(backend_id, req.prompt, sorted, req.seed))
        .expect("cache key serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct ResponseCache {
    entries: RwLock<HashMap<String, String>>,
    appender: Mutex<Option<File>>,
    path: Option<PathBuf>,
}

impl ResponseCache {
    /// A purely in-memory cache.
    pub fn in_memory() -> Self {
        ResponseCache {
            entries: RwLock::new(HashMap::new()),
            appender: Mutex::new(None),
            path: None,
        }
    }

    /// Open (or create) a cache file, loading any existing records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref().to_path_buf();
        let mut entries = HashMap::new();
        if path.exists() {
            let file = File::open(&path).map_err(|e| LlmError::CacheIo(e.to_string()))?;
            for line in BufReader::new(file).lines() {
                let line = line.map_err(|e| LlmError::CacheIo(e.to_string()))?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: CacheRecord =
                    serde_json::from_str(&line).map_err(|e| LlmError::CacheIo(e.to_string()))?;
                entries.insert(rec.key, rec.reply);
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| LlmError::CacheIo(e.to_string()))?;
        Ok(ResponseCache {
            entries: RwLock::new(entries),
            appender: Mutex::new(Some(file)),
            path: Some(path),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().unwrap().get(key).cloned()
    }

    pub fn insert(&self, key: String, reply: String) -> Result<(), LlmError> {
        {
            let mut entries = self.entries.write().unwrap();
            if entries.contains_key(&key) {
                return Ok(());
            }
            entries.insert(key.clone(), reply.clone());
        }
        let mut guard = self.appender.lock().unwrap();
        if let Some(file) = guard.as_mut() {
            let line = serde_json::to_string(&CacheRecord { key, reply })
                .map_err(|e| LlmError::CacheIo(e.to_string()))?;
            writeln!(file, "{line}").map_err(|e| LlmError::CacheIo(e.to_string()))?;
        }
        Ok(())
    }
}

/// Look up the request in the cache; on a miss call the backend and store
/// its reply. Backend errors propagate and are never cached. Returns the
/// reply and whether it was a hit.
pub fn cached_decide(
    cache: &ResponseCache,
    backend: &dyn DecisionBackend,
    req: &DecisionRequest<'_>,
) -> Result<(String, bool), LlmError> {
    let key = cache_key(&backend.id(), req);
    if let Some(reply) = cache.get(&key) {
        return Ok((reply, true));
    }
    let reply = backend.decide(req)?;
    cache.insert(key, reply.clone())?;
    Ok((reply, false))
}

/// A backend that only replays cached replies; any miss is an error. Used
/// by the replay verb to guarantee zero live calls.
pub struct ReplayBackend<'a> {
    pub cache: &'a ResponseCache,
    pub inner_id: String,
}

impl DecisionBackend for ReplayBackend<'_> {
    fn id(&self) -> String {
        self.inner_id.clone()
    }

    fn decide(&self, req: &DecisionRequest<'_>) -> Result<String, LlmError> {
        let key = cache_key(&self.inner_id, req);
        self.cache.get(&key).ok_or(LlmError::CacheMiss)
    }
}
