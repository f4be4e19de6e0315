//! Content-addressed store of exact optima.
//!
//! The key is the SHA-256 of an instance's full text description, so a
//! cached value can only be reused for the identical instance.

use std::fs;
use std::io::ErrorKind;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};

use sha2::{Digest, Sha256};
use ssr_core::Cost;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone)]
pub struct OptimumCache {
    dir: PathBuf,
}

impl OptimumCache {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir }
    }

    fn path(&self, description: &str) -> PathBuf {
        let digest = Sha256::digest(description.as_bytes());
        self.dir.join(format!("{}.opt", hex::encode(digest)))
    }

    pub fn get(&self, description: &str) -> Result<Option<Cost>> {
        let path = self.path(description);
        match fs::read_to_string(&path) {
            Ok(text) => text.trim().parse().map(Some).map_err(|_| {
                BenchError::Config(format!("corrupt cache entry {}", path.display()))
            }),
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes through a temporary file so concurrent readers never see a
    /// partial entry.
    pub fn put(&self, description: &str, optimum: Cost) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let path = self.path(description);
        static NEXT: AtomicU64 = AtomicU64::new(0);
        let unique = NEXT.fetch_add(1, Ordering::Relaxed);
        let tmp = path.with_extension(format!("tmp{}-{unique}", std::process::id()));
        fs::write(&tmp, format!("{optimum}\n"))?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}
