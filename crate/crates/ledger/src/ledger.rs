//! The single-validator ledger: registry, policy, channels and sealing.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::block::{verify_blocks, Block, ChainHead, Tampering};
use crate::error::{LedgerError, Result};
use crate::events::{event_for, replay_events, Event};
use crate::hash::Hash32;
use crate::identity::{Participant, Registry, Role, SigningKey};
use crate::offchain::OffChainStore;
use crate::policy::AccessPolicy;
use crate::store::DiskStore;
use crate::tx::{DenialReason, SignedDraft, Transaction, TxDraft, TxStatus, TxType};

pub const DEFAULT_CHANNEL: &str = "main";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerConfig {
    /// Seal a block once this many transactions are pending.
    pub seal_every: usize,
}

impl Default for LedgerConfig {
    fn default() -> Self {
        LedgerConfig { seal_every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Receipt {
    pub tx_id: Hash32,
    pub seq: u64,
    pub channel: String,
    /// Block holding the transaction, when already sealed.
    pub block_index: Option<u64>,
}

#[derive(Debug, Clone, Default)]
struct Channel {
    blocks: Vec<Block>,
    pending: Vec<Transaction>,
    events: Vec<Event>,
    head: Option<ChainHead>,
}

#[derive(Serialize, Deserialize)]
struct State {
    config: LedgerConfig,
    registry: Registry,
    policy: AccessPolicy,
    ca_key: Option<SigningKey>,
    seq: u64,
    channels: Vec<String>,
}

#[derive(Debug)]
pub struct Ledger {
    config: LedgerConfig,
    registry: Registry,
    policy: AccessPolicy,
    ca_key: Option<SigningKey>,
    offchain: OffChainStore,
    disk: Option<DiskStore>,
    channels: BTreeMap<String, Channel>,
    seq: u64,
    last_ts: i64,
}

fn now_ms() -> i64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64)
}

fn check_channel_name(name: &str) -> Result<()> {
    let ok = !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
    if ok {
        Ok(())
    } else {
        Err(LedgerError::UnknownChannel(name.to_string()))
    }
}

impl Ledger {
    /// In-memory ledger with the standard policy and a `main` channel.
    pub fn new(config: LedgerConfig) -> Ledger {
        let mut l = Ledger {
            config: LedgerConfig { seal_every: config.seal_every.max(1) },
            registry: Registry::default(),
            policy: AccessPolicy::standard(),
            ca_key: None,
            offchain: OffChainStore::in_memory(),
            disk: None,
            channels: BTreeMap::new(),
            seq: 0,
            last_ts: 0,
        };
        l.create_channel(DEFAULT_CHANNEL).expect("fresh ledger");
        l
    }

    /// Opens a ledger directory, creating it when empty. The recorded heads
    /// are loaded but chains are not verified here.
    pub fn open(dir: impl AsRef<Path>, config: LedgerConfig) -> Result<Ledger> {
        let disk = DiskStore::new(dir)?;
        let offchain = OffChainStore::open(disk.offchain_dir())?;
        if !disk.has_state() {
            let mut l = Ledger::new(config);
            l.offchain = offchain;
            let main = l.channels.get(DEFAULT_CHANNEL).expect("created").blocks[0].clone();
            disk.append_block(DEFAULT_CHANNEL, &main)?;
            l.disk = Some(disk);
            l.save_state()?;
            return Ok(l);
        }
        let state: State = disk.read_json(&disk.state_path())?;
        let mut channels = BTreeMap::new();
        let mut last_ts = 0;
        for name in &state.channels {
            check_channel_name(name)?;
            let blocks = disk.read_blocks(name)?;
            let head = disk.read_head(name)?;
            last_ts = blocks.iter().map(|b| b.timestamp_ms).fold(last_ts, i64::max);
            let events = replay_events(&blocks);
            channels.insert(name.clone(), Channel { blocks, pending: Vec::new(), events, head });
        }
        Ok(Ledger {
            config: LedgerConfig { seal_every: config.seal_every.max(1) },
            registry: state.registry,
            policy: state.policy,
            ca_key: state.ca_key,
            offchain,
            disk: Some(disk),
            channels,
            seq: state.seq,
            last_ts,
        })
    }

    fn save_state(&self) -> Result<()> {
        let Some(disk) = &self.disk else { return Ok(()) };
        let state = State {
            config: self.config,
            registry: self.registry.clone(),
            policy: self.policy.clone(),
            ca_key: self.ca_key.clone(),
            seq: self.seq,
            channels: self.channels.keys().cloned().collect(),
        };
        disk.write_json(&disk.state_path(), &state)
    }

    fn tick(&mut self) -> i64 {
        self.last_ts = self.last_ts.max(now_ms());
        self.last_ts
    }

    pub fn config(&self) -> LedgerConfig {
        self.config
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn participant(&self, id: &str) -> Option<&Participant> {
        self.registry.get(id)
    }

    pub fn policy(&self) -> &AccessPolicy {
        &self.policy
    }

    pub fn set_policy(&mut self, policy: AccessPolicy) -> Result<()> {
        self.policy = policy;
        self.save_state()
    }

    pub fn grant(&mut self, grantee: &str, subject: &str, asset: crate::tx::AssetClass, action: crate::tx::Action) -> Result<()> {
        self.policy.grant(grantee, subject, asset, action);
        self.save_state()
    }

    pub fn create_channel(&mut self, name: &str) -> Result<()> {
        check_channel_name(name)?;
        if self.channels.contains_key(name) {
            return Ok(());
        }
        let genesis = Block::genesis(name, self.tick());
        if let Some(d) = &self.disk {
            d.append_block(name, &genesis)?;
        }
        let head = ChainHead::of(std::slice::from_ref(&genesis));
        self.channels.insert(name.to_string(), Channel { blocks: vec![genesis], head, ..Channel::default() });
        self.save_state()
    }

    pub fn channel_names(&self) -> Vec<String> {
        self.channels.keys().cloned().collect()
    }

    fn channel(&self, name: &str) -> Result<&Channel> {
        self.channels.get(name).ok_or_else(|| LedgerError::UnknownChannel(name.to_string()))
    }

    pub fn blocks(&self, channel: &str) -> Result<&[Block]> {
        Ok(&self.channel(channel)?.blocks)
    }

    pub fn pending(&self, channel: &str) -> Result<&[Transaction]> {
        Ok(&self.channel(channel)?.pending)
    }

    pub fn events(&self, channel: &str) -> Result<&[Event]> {
        Ok(&self.channel(channel)?.events)
    }

    /// Height and hash of the last sealed block as recorded at seal time.
    pub fn head(&self, channel: &str) -> Result<Option<ChainHead>> {
        Ok(self.channel(channel)?.head)
    }

    // ---- certificate authority ----

    pub fn bootstrap_ca(&mut self, id: &str, identity_proof: &str, pin: &str) -> Result<Participant> {
        if self.ca_key.is_some() {
            return Err(LedgerError::CertificateAuthorityExists);
        }
        let (p, key) = self.registry.enroll(id, Role::CertificateAuthority, identity_proof, pin)?;
        self.ca_key = Some(key);
        self.record_admin(TxType::Registration, id, TxStatus::Accepted, &[("role", Role::CertificateAuthority.name())])?;
        Ok(p)
    }

    fn ca_key(&self) -> Result<&SigningKey> {
        self.ca_key.as_ref().ok_or(LedgerError::NoCertificateAuthority)
    }

    fn record_admin(&mut self, tx_type: TxType, subject: &str, status: TxStatus, meta: &[(&str, &str)]) -> Result<Transaction> {
        let ca = self.ca_key()?.clone();
        let mut draft = TxDraft::new(tx_type, ca.participant.clone(), subject);
        for (k, v) in meta {
            draft = draft.meta(*k, *v);
        }
        let tx = self.sequence(draft.sign(&ca), status);
        self.enqueue(DEFAULT_CHANNEL, tx.clone())?;
        self.save_state()?;
        Ok(tx)
    }

    /// Enrolls a participant and records the registration with the CA as actor.
    pub fn register_participant(&mut self, id: &str, role: Role, identity_proof: &str, pin: &str) -> Result<(Participant, SigningKey)> {
        self.ca_key()?;
        let (p, key) = self.registry.enroll(id, role, identity_proof, pin)?;
        self.record_admin(TxType::Registration, id, TxStatus::Accepted, &[("role", role.name())])?;
        Ok((p, key))
    }

    /// Issues a new key pair after checking pin and identity proof. A failed
    /// attempt leaves the credential untouched and is recorded as denied.
    pub fn recover_credentials(&mut self, id: &str, pin: &str, identity_proof: &str) -> Result<SigningKey> {
        self.ca_key()?;
        match self.registry.reissue(id, pin, identity_proof) {
            Ok(key) => {
                self.record_admin(TxType::CredentialRecovery, id, TxStatus::Accepted, &[])?;
                Ok(key)
            }
            Err(e @ (LedgerError::Authentication(_) | LedgerError::Revoked(_))) => {
                self.record_admin(TxType::CredentialRecovery, id, TxStatus::Denied(DenialReason::Authentication), &[])?;
                Err(e)
            }
            Err(e) => Err(e),
        }
    }

    /// Removes a participant from the network; all later operations fail.
    pub fn revoke_participant(&mut self, id: &str) -> Result<()> {
        self.ca_key()?;
        self.registry.revoke(id)?;
        self.record_admin(TxType::Revocation, id, TxStatus::Accepted, &[])?;
        Ok(())
    }

    // ---- off-chain content ----

    pub fn store_offchain(&self, payload: &[u8]) -> Result<Hash32> {
        self.offchain.put(payload)
    }

    pub fn fetch(&self, hash: &Hash32) -> Result<Vec<u8>> {
        self.offchain.get(hash)
    }

    pub fn offchain(&self) -> &OffChainStore {
        &self.offchain
    }

    // ---- transactions ----

    fn sequence(&mut self, signed: SignedDraft, status: TxStatus) -> Transaction {
        self.seq += 1;
        let ts = self.tick();
        Transaction::new(self.seq, ts, signed, status)
    }

    fn check(&self, signed: &SignedDraft) -> Result<(), DenialReason> {
        let d = &signed.draft;
        let actor = self.registry.get(&d.actor).ok_or(DenialReason::UnknownActor)?;
        if actor.credential.revoked {
            return Err(DenialReason::RevokedCredential);
        }
        if !self.registry.verify(&d.actor, &signed.key_pair_id, &d.signing_bytes(), &signed.signature) {
            return Err(DenialReason::BadSignature);
        }
        let (asset, action) = d.access().ok_or(DenialReason::Administrative)?;
        match d.payload_hash {
            None if d.tx_type.is_update() => return Err(DenialReason::MissingPayload),
            Some(h) if !self.offchain.contains(&h) => return Err(DenialReason::UnresolvedPayload),
            _ => {}
        }
        if !self.policy.permits(actor, &d.subject, asset, action) {
            return Err(DenialReason::Policy);
        }
        Ok(())
    }

    pub fn submit(&mut self, signed: SignedDraft) -> Result<Receipt> {
        self.submit_to(DEFAULT_CHANNEL, signed)
    }

    /// Validates and records a transaction. Rejected submissions are recorded
    /// too, with their reason, and returned as [`LedgerError::Denied`].
    pub fn submit_to(&mut self, channel: &str, signed: SignedDraft) -> Result<Receipt> {
        self.channel(channel)?;
        let verdict = self.check(&signed);
        let status = match verdict {
            Ok(()) => TxStatus::Accepted,
            Err(r) => TxStatus::Denied(r),
        };
        let tx = self.sequence(signed, status);
        let (tx_id, seq) = (tx.tx_id, tx.seq);
        let block_index = self.enqueue(channel, tx)?;
        if self.disk.is_some() {
            self.save_state()?;
        }
        match verdict {
            Ok(()) => Ok(Receipt { tx_id, seq, channel: channel.to_string(), block_index }),
            Err(reason) => Err(LedgerError::Denied { tx_id, reason }),
        }
    }

    fn enqueue(&mut self, channel: &str, tx: Transaction) -> Result<Option<u64>> {
        let ch = self.channels.get_mut(channel).ok_or_else(|| LedgerError::UnknownChannel(channel.to_string()))?;
        ch.pending.push(tx);
        if ch.pending.len() >= self.config.seal_every {
            self.seal(channel)
        } else {
            Ok(None)
        }
    }

    /// Seals pending transactions into a block. Returns its index, or `None`
    /// when nothing was pending.
    pub fn seal(&mut self, channel: &str) -> Result<Option<u64>> {
        let ts = self.tick();
        let ch = self.channels.get_mut(channel).ok_or_else(|| LedgerError::UnknownChannel(channel.to_string()))?;
        if ch.pending.is_empty() {
            return Ok(None);
        }
        let prev = ch.blocks.last().expect("genesis always present");
        let block = Block::seal(prev.index + 1, prev.block_hash, ts, BTreeMap::new(), std::mem::take(&mut ch.pending));
        if let Some(d) = &self.disk {
            d.append_block(channel, &block)?;
        }
        ch.events.extend(block.txs.iter().filter_map(event_for));
        ch.head = Some(ChainHead { height: block.index + 1, hash: block.block_hash });
        let index = block.index;
        ch.blocks.push(block);
        Ok(Some(index))
    }

    /// Seals every channel with pending transactions.
    pub fn flush(&mut self) -> Result<()> {
        for name in self.channel_names() {
            self.seal(&name)?;
        }
        self.save_state()
    }

    // ---- audit ----

    /// Recomputes hashes and links against the recorded head.
    pub fn verify_chain(&self, channel: &str) -> Result<Result<(), Tampering>> {
        let ch = self.channel(channel)?;
        Ok(verify_blocks(&ch.blocks, ch.head.as_ref()))
    }

    /// Every transaction touching `key` (participant id, tx id or payload
    /// hash), sealed ones first in block order, denied entries included.
    pub fn audit_trail(&self, channel: &str, key: &str) -> Result<Vec<&Transaction>> {
        let ch = self.channel(channel)?;
        Ok(ch.blocks.iter().flat_map(|b| b.txs.iter()).chain(ch.pending.iter()).filter(|t| t.touches(key)).collect())
    }

    /// Accepted update transactions whose payload is missing off-chain.
    pub fn integrity_sweep(&self, channel: &str) -> Result<Vec<Hash32>> {
        let ch = self.channel(channel)?;
        Ok(ch
            .blocks
            .iter()
            .flat_map(|b| b.txs.iter())
            .filter(|t| t.is_accepted() && t.tx_type().is_update())
            .filter(|t| t.payload_hash().is_none_or(|h| !self.offchain.contains(&h)))
            .map(|t| t.tx_id)
            .collect())
    }

    pub fn find_tx(&self, channel: &str, tx_id: &Hash32) -> Result<Option<&Transaction>> {
        let ch = self.channel(channel)?;
        Ok(ch.blocks.iter().flat_map(|b| b.txs.iter()).chain(ch.pending.iter()).find(|t| t.tx_id == *tx_id))
    }

    /// Number of transactions recorded in a channel, sealed or pending.
    pub fn tx_count(&self, channel: &str) -> Result<usize> {
        let ch = self.channel(channel)?;
        Ok(ch.blocks.iter().map(|b| b.txs.len()).sum::<usize>() + ch.pending.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tx::{Action, AssetClass};

    fn network() -> (Ledger, SigningKey, SigningKey) {
        let mut l = Ledger::new(LedgerConfig::default());
        l.bootstrap_ca("ca", "root-proof", "0000").unwrap();
        let (_, h) = l.register_participant("H1", Role::Hospital, "licence", "1111").unwrap();
        let (_, p) = l.register_participant("P1", Role::Patient, "passport", "2222").unwrap();
        (l, h, p)
    }

    #[test]
    fn registration_is_recorded_with_ca_actor() {
        let (l, _, _) = network();
        let trail = l.audit_trail(DEFAULT_CHANNEL, "P1").unwrap();
        assert_eq!(trail.len(), 1);
        assert_eq!(trail[0].tx_type(), TxType::Registration);
        assert_eq!(trail[0].actor(), "ca");
    }

    #[test]
    fn registration_preconditions() {
        let mut l = Ledger::new(LedgerConfig::default());
        assert!(matches!(l.register_participant("P1", Role::Patient, "x", "1"), Err(LedgerError::NoCertificateAuthority)));
        l.bootstrap_ca("ca", "r", "0").unwrap();
        l.register_participant("P1", Role::Patient, "x", "1").unwrap();
        assert!(matches!(l.register_participant("P1", Role::Patient, "x", "1"), Err(LedgerError::DuplicateParticipant(_))));
        assert!(matches!(l.bootstrap_ca("ca2", "r", "0"), Err(LedgerError::CertificateAuthorityExists)));
    }

    #[test]
    fn lab_results_notify_patient() {
        let (mut l, h, _) = network();
        let payload = l.store_offchain(b"fpg=131").unwrap();
        let r = l.submit(TxDraft::new(TxType::LabResultsUpdate, "H1", "P1").payload(payload).sign(&h)).unwrap();
        assert!(r.block_index.is_some());
        let ev = l.events(DEFAULT_CHANNEL).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].recipient, crate::events::Recipient::Participant("P1".into()));
        assert_eq!(ev[0].tx_id, r.tx_id);
    }

    #[test]
    fn cross_patient_query_denied_and_audited() {
        let (mut l, _, _) = network();
        let (_, b) = l.register_participant("P2", Role::Patient, "id2", "3333").unwrap();
        let err = l.submit(TxDraft::new(TxType::Query, "P2", "P1").asset(AssetClass::MedicalCondition).sign(&b)).unwrap_err();
        let LedgerError::Denied { tx_id, reason } = err else { panic!("expected denial") };
        assert_eq!(reason, DenialReason::Policy);
        let trail = l.audit_trail(DEFAULT_CHANNEL, "P1").unwrap();
        let last = trail.last().unwrap();
        assert_eq!(last.tx_id, tx_id);
        assert_eq!(last.status, TxStatus::Denied(DenialReason::Policy));
        assert!(l.submit(TxDraft::new(TxType::Query, "P2", "P2").sign(&b)).is_ok());
        l.grant("P2", "P1", AssetClass::MedicalCondition, Action::Read).unwrap();
        assert!(l.submit(TxDraft::new(TxType::Query, "P2", "P1").sign(&b)).is_ok());
    }

    #[test]
    fn signature_and_payload_checks() {
        let (mut l, h, p) = network();
        let forged = TxDraft::new(TxType::MedicalRecordUpdate, "H1", "P1").payload(l.store_offchain(b"x").unwrap()).sign(&p);
        assert!(matches!(l.submit(forged), Err(LedgerError::Denied { reason: DenialReason::BadSignature, .. })));
        let missing = TxDraft::new(TxType::MedicalRecordUpdate, "H1", "P1").sign(&h);
        assert!(matches!(l.submit(missing), Err(LedgerError::Denied { reason: DenialReason::MissingPayload, .. })));
        let dangling = TxDraft::new(TxType::MedicalRecordUpdate, "H1", "P1").payload(Hash32::of(b"nowhere")).sign(&h);
        assert!(matches!(l.submit(dangling), Err(LedgerError::Denied { reason: DenialReason::UnresolvedPayload, .. })));
        let admin = TxDraft::new(TxType::Revocation, "H1", "P1").sign(&h);
        assert!(matches!(l.submit(admin), Err(LedgerError::Denied { reason: DenialReason::Administrative, .. })));
        assert!(l.integrity_sweep(DEFAULT_CHANNEL).unwrap().is_empty());
    }

    #[test]
    fn recovery_rotates_keys() {
        let (mut l, _, old) = network();
        assert!(matches!(l.recover_credentials("P1", "9999", "passport"), Err(LedgerError::Authentication(_))));
        let denied = l.audit_trail(DEFAULT_CHANNEL, "P1").unwrap();
        assert_eq!(denied.last().unwrap().status, TxStatus::Denied(DenialReason::Authentication));
        assert_eq!(l.participant("P1").unwrap().credential.key_pair_id, old.key_pair_id);

        let new = l.recover_credentials("P1", "2222", "passport").unwrap();
        let q = |k: &SigningKey| TxDraft::new(TxType::Query, "P1", "P1").sign(k);
        assert!(matches!(l.submit(q(&old)), Err(LedgerError::Denied { reason: DenialReason::BadSignature, .. })));
        assert!(l.submit(q(&new)).is_ok());
    }

    #[test]
    fn revoked_participants_are_rejected() {
        let (mut l, _, p) = network();
        l.revoke_participant("P1").unwrap();
        let r = l.submit(TxDraft::new(TxType::Query, "P1", "P1").sign(&p));
        assert!(matches!(r, Err(LedgerError::Denied { reason: DenialReason::RevokedCredential, .. })));
        assert!(matches!(l.recover_credentials("P1", "2222", "passport"), Err(LedgerError::Revoked(_))));
    }

    #[test]
    fn batched_sealing() {
        let mut l = Ledger::new(LedgerConfig { seal_every: 3 });
        l.bootstrap_ca("ca", "r", "0").unwrap();
        l.register_participant("a", Role::Patient, "x", "1").unwrap();
        assert_eq!(l.blocks(DEFAULT_CHANNEL).unwrap().len(), 1);
        assert_eq!(l.pending(DEFAULT_CHANNEL).unwrap().len(), 2);
        l.register_participant("b", Role::Patient, "x", "1").unwrap();
        assert_eq!(l.blocks(DEFAULT_CHANNEL).unwrap().len(), 2);
        assert_eq!(l.blocks(DEFAULT_CHANNEL).unwrap()[1].txs.len(), 3);
        assert_eq!(l.verify_chain(DEFAULT_CHANNEL).unwrap(), Ok(()));
    }

    #[test]
    fn channels_share_the_registry() {
        let (mut l, h, _) = network();
        l.create_channel("allied").unwrap();
        let payload = l.store_offchain(b"cbc").unwrap();
        l.submit_to("allied", TxDraft::new(TxType::LabResultsUpdate, "H1", "P1").payload(payload).sign(&h)).unwrap();
        assert_eq!(l.tx_count("allied").unwrap(), 1);
        assert_eq!(l.blocks("allied").unwrap()[0].meta["channel"], "allied");
        assert!(l.audit_trail(DEFAULT_CHANNEL, &payload.to_hex()).unwrap().is_empty());
        assert!(matches!(l.create_channel("../x"), Err(LedgerError::UnknownChannel(_))));
    }
}
