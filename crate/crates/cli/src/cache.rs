//! Per-row result cache keyed by a hash of the sweep configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::fail::CliError;

/// Environment variable naming the cache root.
pub const CACHE_ENV: &str = "VORTRAP_CACHE_DIR";

/// Bumped whenever cached row contents would change for the same config.
const FORMAT: u32 = 1;

/// Hex SHA-256 of the JSON form of `value` plus the library version.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    #[derive(Serialize)]
    struct Keyed<'a, T> {
        format: u32,
        version: &'a str,
        config: &'a T,
    }
    let json = serde_json::to_vec(&Keyed {
        format: FORMAT,
        version: env!("CARGO_PKG_VERSION"),
        config: value,
    })
    .expect("configuration serializes");
    let digest = Sha256::digest(&json);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_root(out_dir: &Path) -> PathBuf {
    std::env::var_os(CACHE_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| out_dir.join(".cache"))
}

pub struct RowCache {
    dir: PathBuf,
}

impl RowCache {
    pub fn open(root: &Path, key: &str) -> Result<Self, CliError> {
        let dir = root.join(key);
        fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
        Ok(Self { dir })
    }

    fn path(&self, kind: &str, index: usize) -> PathBuf {
        self.dir.join(format!("{kind}-{index:05}.csv"))
    }

    pub fn get(&self, kind: &str, index: usize) -> Option<String> {
        fs::read_to_string(self.path(kind, index)).ok()
    }

    /// Write through a temporary file so an interrupted run never leaves a
    /// truncated entry behind.
    pub fn put(&self, kind: &str, index: usize, text: &str) -> Result<(), CliError> {
        let path = self.path(kind, index);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, text).map_err(|e| CliError::io(tmp.display(), e))?;
        fs::rename(&tmp, &path).map_err(|e| CliError::io(path.display(), e))
    }
}
