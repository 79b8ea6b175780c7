//! Content-addressed JSON cache: one file per entry, named by the SHA-256 of its key.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const CACHE_ENV: &str = "THETAPAIR_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn disabled() -> Self {
        Cache { dir: None }
    }

    pub fn at(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: Some(dir.into()) }
    }

    /// Flag, then environment, then `$HOME/.cache/thetapair`.
    pub fn resolve(flag: Option<&Path>, disabled: bool) -> Self {
        if disabled {
            return Cache::disabled();
        }
        if let Some(p) = flag {
            return Cache::at(p);
        }
        if let Some(p) = std::env::var_os(CACHE_ENV) {
            return Cache::at(p);
        }
        match std::env::var_os("HOME") {
            Some(home) => Cache::at(Path::new(&home).join(".cache").join("thetapair")),
            None => Cache::disabled(),
        }
    }

    pub fn key_of(key: &impl Serialize) -> Result<String, CliError> {
        let bytes = serde_json::to_vec(key)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    fn path(&self, hash: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{hash}.json")))
    }

    /// Returns the cached value for `key`, computing and storing it on a miss.
    /// Unreadable entries are treated as misses and overwritten.
    pub fn get_or_compute<K, V, F>(&self, key: &K, compute: F) -> Result<V, CliError>
    where
        K: Serialize,
        V: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<V, CliError>,
    {
        let hash = Self::key_of(key)?;
        let Some(path) = self.path(&hash) else {
            return compute();
        };
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(v) = serde_json::from_str(&text) {
                return Ok(v);
            }
        }
        let v = compute()?;
        // a failed write only costs a recomputation next time
        let _ = write_atomic(&path, &serde_json::to_vec(&v)?);
        Ok(v)
    }
}

/// Writes to a sibling temporary file, then renames over the target.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".{}.{}.tmp", path.file_name().and_then(|s| s.to_str()).unwrap_or("entry"), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
