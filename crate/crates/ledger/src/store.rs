//! On-disk layout of a ledger directory.
//!
//! ```text
//! state.json            registry, policy, sequence counter, channel names
//! chain-<channel>.blk   append-only, u64 length prefix per block
//! HEAD-<channel>        height and hash of the last sealed block
//! offchain/             content-addressed payloads
//! ```

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Serialize};

use crate::block::{Block, ChainHead};
use crate::error::{LedgerError, Result};

#[derive(Debug, Clone)]
pub struct DiskStore {
    root: PathBuf,
}

impl DiskStore {
    pub fn new(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        Ok(DiskStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn offchain_dir(&self) -> PathBuf {
        self.root.join("offchain")
    }

    pub fn state_path(&self) -> PathBuf {
        self.root.join("state.json")
    }

    pub fn chain_path(&self, channel: &str) -> PathBuf {
        self.root.join(format!("chain-{channel}.blk"))
    }

    pub fn head_path(&self, channel: &str) -> PathBuf {
        self.root.join(format!("HEAD-{channel}"))
    }

    pub fn has_state(&self) -> bool {
        self.state_path().exists()
    }

    pub fn append_block(&self, channel: &str, block: &Block) -> Result<()> {
        let bytes = block.to_bytes();
        let mut f = OpenOptions::new().create(true).append(true).open(self.chain_path(channel))?;
        f.write_all(&(bytes.len() as u64).to_be_bytes())?;
        f.write_all(&bytes)?;
        f.sync_data()?;
        self.write_json(&self.head_path(channel), &ChainHead { height: block.index + 1, hash: block.block_hash })
    }

    pub fn read_blocks(&self, channel: &str) -> Result<Vec<Block>> {
        let bytes = match fs::read(self.chain_path(channel)) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut blocks = Vec::new();
        let mut pos = 0usize;
        while pos < bytes.len() {
            let corrupt = |what: &str| LedgerError::Corrupt(format!("chain '{channel}' record {}: {what}", blocks.len()));
            let len_bytes = bytes.get(pos..pos + 8).ok_or_else(|| corrupt("truncated length"))?;
            let len = u64::from_be_bytes(len_bytes.try_into().expect("8 bytes")) as usize;
            pos += 8;
            let body = bytes.get(pos..pos.saturating_add(len)).ok_or_else(|| corrupt("truncated block"))?;
            blocks.push(Block::from_bytes(body).map_err(|e| corrupt(&e.to_string()))?);
            pos += len;
        }
        Ok(blocks)
    }

    pub fn read_head(&self, channel: &str) -> Result<Option<ChainHead>> {
        let p = self.head_path(channel);
        if !p.exists() {
            return Ok(None);
        }
        self.read_json(&p).map(Some)
    }

    pub fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let json = serde_json::to_vec_pretty(value).map_err(|e| LedgerError::Corrupt(e.to_string()))?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, json)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_json<T: DeserializeOwned>(&self, path: &Path) -> Result<T> {
        let bytes = fs::read(path)?;
        serde_json::from_slice(&bytes).map_err(|e| LedgerError::Corrupt(format!("{}: {e}", path.display())))
    }
}
