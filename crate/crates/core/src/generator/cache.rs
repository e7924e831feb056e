//! Content-addressed store for generated images.
//!
//! Keys are SHA-256 over length-prefixed `(backend_id, rendered prompt,
//! source pixels)`. Entries live at `{dir}/{key[..2]}/{key}.png`. Writes go
//! through a temp file and an atomic rename, serialized per key; the first
//! writer wins and readers of a finished entry take no lock.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::GeneratorBackend;
use crate::error::{Error, Result};
use crate::imgcore::{encode_png, load_image, ImageBuffer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CacheKey([u8; 32]);

impl CacheKey {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for CacheKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

fn update_field(hasher: &mut Sha256, bytes: &[u8]) {
    hasher.update((bytes.len() as u64).to_le_bytes());
    hasher.update(bytes);
}

/// Source pixels enter the digest as `width, height` (u32 LE) followed by
/// every channel's `f32` bit pattern (LE).
pub fn cache_key(backend_id: &str, rendered_prompt: &str, img: &ImageBuffer) -> CacheKey {
    let mut pixels = Vec::with_capacity(8 + img.as_slice().len() * 4);
    pixels.extend(img.width().to_le_bytes());
    pixels.extend(img.height().to_le_bytes());
    for v in img.as_slice() {
        pixels.extend(v.to_le_bytes());
    }
    let mut hasher = Sha256::new();
    update_field(&mut hasher, backend_id.as_bytes());
    update_field(&mut hasher, rendered_prompt.as_bytes());
    update_field(&mut hasher, &pixels);
    CacheKey(hasher.finalize().into())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

#[derive(Debug)]
pub struct GenerationCache {
    dir: PathBuf,
    hits: AtomicU64,
    misses: AtomicU64,
    locks: Mutex<HashMap<CacheKey, Arc<Mutex<()>>>>,
}

impl GenerationCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            locks: Mutex::default(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, key: &CacheKey) -> PathBuf {
        let hex = key.to_hex();
        self.dir.join(&hex[..2]).join(format!("{hex}.png"))
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    fn lookup(&self, path: &Path) -> Option<ImageBuffer> {
        if !path.is_file() {
            return None;
        }
        match load_image(path) {
            Ok(img) => Some(img),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                None
            }
        }
    }

    /// Returns the cached generation for `(backend, prompt, img)`, calling the
    /// backend only on a miss.
    ///
    /// The returned image is always the 8-bit-quantized result, so hits and
    /// misses are indistinguishable to the caller.
    pub fn get_or_generate(
        &self,
        backend: &dyn GeneratorBackend,
        img: &ImageBuffer,
        rendered_prompt: &str,
    ) -> Result<ImageBuffer> {
        let key = cache_key(backend.backend_id(), rendered_prompt, img);
        let path = self.entry_path(&key);
        if let Some(hit) = self.lookup(&path) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }

        let lock = Arc::clone(
            self.locks
                .lock()
                .expect("cache lock table poisoned")
                .entry(key)
                .or_default(),
        );
        let _guard = lock.lock().expect("cache entry lock poisoned");
        // Another worker may have finished this entry while we waited.
        if let Some(hit) = self.lookup(&path) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(hit);
        }

        self.misses.fetch_add(1, Ordering::Relaxed);
        let generated = backend.generate(img, rendered_prompt)?.quantized();
        let shard = path.parent().expect("entry path has a shard directory");
        std::fs::create_dir_all(shard).map_err(|e| Error::io(shard, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(shard).map_err(|e| Error::io(shard, e))?;
        std::io::Write::write_all(&mut tmp, &encode_png(&generated)?).map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(generated)
    }
}
