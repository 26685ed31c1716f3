//! Content-addressed payload store.
//!
//! Payloads live in memory and, when opened on a directory, also as one file
//! per digest. Reads verify the digest before returning bytes.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use crate::error::{LedgerError, Result};
use crate::hash::Hash32;

#[derive(Debug, Default)]
pub struct OffChainStore {
    blobs: RwLock<BTreeMap<Hash32, Vec<u8>>>,
    dir: Option<PathBuf>,
}

impl OffChainStore {
    pub fn in_memory() -> Self {
        OffChainStore::default()
    }

    /// Opens or creates a directory-backed store.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(OffChainStore { blobs: RwLock::default(), dir: Some(dir) })
    }

    fn path_for(&self, h: &Hash32) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(h.to_hex()))
    }

    pub fn put(&self, payload: &[u8]) -> Result<Hash32> {
        if payload.is_empty() {
            return Err(LedgerError::EmptyPayload);
        }
        let h = Hash32::of(payload);
        let mut blobs = self.blobs.write().expect("store lock poisoned");
        if let Entry::Vacant(slot) = blobs.entry(h) {
            if let Some(p) = self.path_for(&h) {
                if !p.exists() {
                    let tmp = p.with_extension("tmp");
                    fs::write(&tmp, payload)?;
                    fs::rename(&tmp, &p)?;
                }
            }
            slot.insert(payload.to_vec());
        }
        Ok(h)
    }

    pub fn get(&self, h: &Hash32) -> Result<Vec<u8>> {
        if let Some(b) = self.blobs.read().expect("store lock poisoned").get(h) {
            return Ok(b.clone());
        }
        let not_found = || LedgerError::NotFound(format!("off-chain payload {h}"));
        let p = self.path_for(h).ok_or_else(not_found)?;
        let bytes = match fs::read(&p) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Err(not_found()),
            Err(e) => return Err(e.into()),
        };
        if Hash32::of(&bytes) != *h {
            return Err(LedgerError::Corrupt(format!("off-chain payload {h} does not match its digest")));
        }
        self.blobs.write().expect("store lock poisoned").insert(*h, bytes.clone());
        Ok(bytes)
    }

    pub fn contains(&self, h: &Hash32) -> bool {
        self.blobs.read().expect("store lock poisoned").contains_key(h)
            || self.path_for(h).is_some_and(|p| p.exists())
    }

    /// Number of distinct payloads held in memory.
    pub fn len(&self) -> usize {
        self.blobs.read().expect("store lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn content_addressing() {
        let s = OffChainStore::in_memory();
        let a = s.put(b"risk").unwrap();
        let b = s.put(b"risk").unwrap();
        assert_eq!(a, b);
        assert_eq!(s.len(), 1);
        assert_eq!(s.get(&a).unwrap(), b"risk");
        assert!(matches!(s.get(&Hash32::of(b"other")), Err(LedgerError::NotFound(_))));
        assert!(matches!(s.put(b""), Err(LedgerError::EmptyPayload)));
    }

    #[test]
    fn directory_backed() {
        let dir = tempfile::tempdir().unwrap();
        let h = OffChainStore::open(dir.path()).unwrap().put(b"abc").unwrap();
        let reopened = OffChainStore::open(dir.path()).unwrap();
        assert!(reopened.contains(&h));
        assert_eq!(reopened.get(&h).unwrap(), b"abc");
        fs::write(dir.path().join(Hash32::of(b"zz").to_hex()), b"not zz").unwrap();
        assert!(matches!(reopened.get(&Hash32::of(b"zz")), Err(LedgerError::Corrupt(_))));
    }
}
