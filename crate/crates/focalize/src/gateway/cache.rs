//! Content-addressed response cache: one JSON file per request key.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CompletionResult, GatewayError};

/// Everything that determines a response. `run` keeps repeated runs apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    pub model_name: String,
    pub prompt_id: String,
    pub template_body: String,
    pub excerpt_text: String,
    pub top_p: f64,
    pub run: u32,
}

impl CacheKey {
    /// SHA-256 over the JSON encoding of the key.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("key serializes");
        hex::encode(Sha256::digest(bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedCompletion {
    pub key: CacheKey,
    pub result: CompletionResult,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    counter: AtomicU64,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, GatewayError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| GatewayError::Cache {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir,
            counter: AtomicU64::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, digest: &str) -> PathBuf {
        self.dir.join(&digest[..2]).join(format!("{digest}.json"))
    }

    /// A hit requires the stored key to equal `key`; unreadable entries are misses.
    pub fn get(&self, key: &CacheKey) -> Option<CachedCompletion> {
        let text = fs::read_to_string(self.path_for(&key.digest())).ok()?;
        let entry: CachedCompletion = serde_json::from_str(&text).ok()?;
        (entry.key == *key).then_some(entry)
    }

    /// Write to a temporary file and rename it into place.
    pub fn put(&self, entry: &CachedCompletion) -> Result<(), GatewayError> {
        let path = self.path_for(&entry.key.digest());
        let parent = path.parent().expect("cache path has parent");
        let err = |source| GatewayError::Cache {
            path: path.clone(),
            source,
        };
        fs::create_dir_all(parent).map_err(err)?;
        let tmp = parent.join(format!(
            ".tmp-{}-{}",
            std::process::id(),
            self.counter.fetch_add(1, Ordering::Relaxed)
        ));
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&serde_json::to_vec_pretty(entry).expect("entry serializes"))?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| {
            let _ = fs::remove_file(&tmp);
            err(e)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key() -> CacheKey {
        CacheKey {
            model_name: "m".into(),
            prompt_id: "base".into(),
            template_body: "body".into(),
            excerpt_text: "text".into(),
            top_p: 0.1,
            run: 1,
        }
    }

    #[test]
    fn every_component_changes_digest() {
        let base = key().digest();
        let variants = [
            CacheKey { model_name: "n".into(), ..key() },
            CacheKey { prompt_id: "v1".into(), ..key() },
            CacheKey { template_body: "body ".into(), ..key() },
            CacheKey { excerpt_text: "text.".into(), ..key() },
            CacheKey { top_p: 0.2, ..key() },
            CacheKey { run: 2, ..key() },
        ];
        for v in variants {
            assert_ne!(v.digest(), base);
        }
        assert_eq!(key().digest(), base);
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::open(dir.path().join("c")).unwrap();
        assert!(cache.get(&key()).is_none());
        let entry = CachedCompletion {
            key: key(),
            result: CompletionResult {
                raw_text: "zero".into(),
                first_token_logprob: Some(-0.25),
                model_name_echo: "m".into(),
                request_fingerprint: "f".into(),
            },
            created_at: DateTime::parse_from_rfc3339("2024-05-01T00:00:00Z").unwrap().into(),
        };
        cache.put(&entry).unwrap();
        assert_eq!(cache.get(&key()), Some(entry));
    }
}
