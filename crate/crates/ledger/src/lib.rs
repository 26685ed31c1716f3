//! Permissioned hash-linked ledger for health records and prediction audit.
//!
//! A single validator seals signed transactions into SHA-256 linked blocks.
//! Participants are enrolled by a certificate authority, every submission is
//! checked against an access policy with default deny, and bulk payloads live
//! in a content-addressed off-chain store with only their digests on chain.

pub mod block;
pub mod codec;
pub mod error;
pub mod events;
pub mod hash;
pub mod identity;
pub mod ledger;
pub mod offchain;
pub mod policy;
pub mod store;
pub mod tx;

pub use block::{verify_blocks, Block, ChainHead, TamperKind, Tampering};
pub use error::{LedgerError, Result};
pub use events::{replay_events, Event, Recipient};
pub use hash::Hash32;
pub use identity::{Participant, Role, SigningKey};
pub use ledger::{Ledger, LedgerConfig, Receipt, DEFAULT_CHANNEL};
pub use offchain::OffChainStore;
pub use policy::{AccessPolicy, Decision, Effect, Principal, Rule, Scope};
pub use tx::{Action, AssetClass, DenialReason, SignedDraft, Transaction, TxDraft, TxStatus, TxType};
