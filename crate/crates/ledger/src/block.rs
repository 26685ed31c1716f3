//! Blocks, canonical serialization and chain verification.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::error::{LedgerError, Result};
use crate::hash::{Hash32, DIGEST_ALGORITHM};
use crate::tx::Transaction;

const BLOCK_MAGIC: &str = "dmp-block-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub index: u64,
    pub prev_hash: Hash32,
    pub timestamp_ms: i64,
    /// Header fields. The genesis block pins the digest and channel name.
    pub meta: BTreeMap<String, String>,
    pub txs: Vec<Transaction>,
    pub block_hash: Hash32,
}

impl Block {
    pub fn genesis(channel: &str, timestamp_ms: i64) -> Block {
        let mut meta = BTreeMap::new();
        meta.insert("digest".to_string(), DIGEST_ALGORITHM.to_string());
        meta.insert("channel".to_string(), channel.to_string());
        Block::seal(0, Hash32::ZERO, timestamp_ms, meta, Vec::new())
    }

    pub fn seal(index: u64, prev_hash: Hash32, timestamp_ms: i64, meta: BTreeMap<String, String>, txs: Vec<Transaction>) -> Block {
        let mut b = Block { index, prev_hash, timestamp_ms, meta, txs, block_hash: Hash32::ZERO };
        b.block_hash = b.compute_hash();
        b
    }

    fn encode_content(&self, e: &mut Encoder) {
        e.str(BLOCK_MAGIC).u64(self.index).hash(&self.prev_hash).i64(self.timestamp_ms).u64(self.meta.len() as u64);
        for (k, v) in &self.meta {
            e.str(k).str(v);
        }
        e.u64(self.txs.len() as u64);
        for t in &self.txs {
            t.encode_into(e);
        }
    }

    pub fn compute_hash(&self) -> Hash32 {
        let mut e = Encoder::new();
        self.encode_content(&mut e);
        Hash32::of(&e.finish())
    }

    /// Stored hash matches content and every transaction id matches its fields.
    pub fn is_self_consistent(&self) -> bool {
        self.block_hash == self.compute_hash() && self.txs.iter().all(Transaction::id_is_consistent)
    }

    /// Canonical bytes: content followed by the block hash.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        self.encode_content(&mut e);
        e.hash(&self.block_hash);
        e.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Block> {
        let mut d = Decoder::new(bytes);
        let magic = d.string()?;
        if magic != BLOCK_MAGIC {
            return Err(LedgerError::Corrupt(format!("unexpected block header '{magic}'")));
        }
        let index = d.u64()?;
        let prev_hash = d.hash()?;
        let timestamp_ms = d.i64()?;
        let n_meta = d.u64()?;
        let mut meta = BTreeMap::new();
        for _ in 0..n_meta {
            let k = d.string()?;
            meta.insert(k, d.string()?);
        }
        let n_tx = d.u64()?;
        let mut txs = Vec::new();
        for _ in 0..n_tx {
            txs.push(Transaction::decode_from(&mut d)?);
        }
        let block_hash = d.hash()?;
        if !d.is_empty() {
            return Err(LedgerError::Corrupt("trailing bytes after block".into()));
        }
        Ok(Block { index, prev_hash, timestamp_ms, meta, txs, block_hash })
    }
}

/// Last sealed block as recorded outside the chain itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainHead {
    pub height: u64,
    pub hash: Hash32,
}

impl ChainHead {
    pub fn of(blocks: &[Block]) -> Option<ChainHead> {
        blocks.last().map(|b| ChainHead { height: blocks.len() as u64, hash: b.block_hash })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TamperKind {
    /// Content no longer matches the stored block or transaction hash.
    HashMismatch,
    /// A block was re-hashed after modification; its successor no longer links to it.
    BrokenLink,
    BadIndex,
    BadGenesis,
    /// The last block differs from the recorded head.
    HeadMismatch,
    /// Fewer blocks than the recorded head height.
    Truncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tampering {
    pub index: u64,
    pub kind: TamperKind,
}

impl fmt::Display for Tampering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {}: {:?}", self.index, self.kind)
    }
}

/// Recomputes hashes and links, returning the first inconsistent block.
///
/// A self-inconsistent block is reported at its own index. When two
/// self-consistent neighbours fail to link, the predecessor is reported,
/// since that is the block whose hash changed. With `head`, a re-hashed last
/// block and a truncated tail are caught as well.
pub fn verify_blocks(blocks: &[Block], head: Option<&ChainHead>) -> Result<(), Tampering> {
    let Some(first) = blocks.first() else {
        return match head {
            Some(h) if h.height > 0 => Err(Tampering { index: 0, kind: TamperKind::Truncated }),
            _ => Ok(()),
        };
    };
    let tamper = |index: u64, kind| Err(Tampering { index, kind });
    for (i, b) in blocks.iter().enumerate() {
        let i = i as u64;
        if !b.is_self_consistent() {
            return tamper(i, TamperKind::HashMismatch);
        }
        if b.index != i {
            return tamper(i, TamperKind::BadIndex);
        }
        if i > 0 && b.prev_hash != blocks[i as usize - 1].block_hash {
            return tamper(i - 1, TamperKind::BrokenLink);
        }
    }
    if first.prev_hash != Hash32::ZERO || first.meta.get("digest").map(String::as_str) != Some(DIGEST_ALGORITHM) {
        return tamper(0, TamperKind::BadGenesis);
    }
    if let Some(h) = head {
        let len = blocks.len() as u64;
        if len < h.height {
            return tamper(len, TamperKind::Truncated);
        }
        let at = (h.height.max(1) - 1) as usize;
        if blocks[at].block_hash != h.hash {
            return tamper(at as u64, TamperKind::HeadMismatch);
        }
    }
    Ok(())
}
