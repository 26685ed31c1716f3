//! Transaction taxonomy, drafts, signing and canonical encoding.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::error::{LedgerError, Result};
use crate::hash::Hash32;
use crate::identity::SigningKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TxType {
    MedicalRecordUpdate,
    LabResultsUpdate,
    SocialContextualUpdate,
    Query,
    QueryResponse,
    RiskFactorsForPrediction,
    PredictionResult,
    ExpertFeedback,
    /// Administrative entries written by the certificate authority.
    Registration,
    CredentialRecovery,
    Revocation,
    /// One stage of a model training and deployment run.
    ModelStage,
}

impl TxType {
    pub const ALL: [TxType; 12] = [
        TxType::MedicalRecordUpdate,
        TxType::LabResultsUpdate,
        TxType::SocialContextualUpdate,
        TxType::Query,
        TxType::QueryResponse,
        TxType::RiskFactorsForPrediction,
        TxType::PredictionResult,
        TxType::ExpertFeedback,
        TxType::Registration,
        TxType::CredentialRecovery,
        TxType::Revocation,
        TxType::ModelStage,
    ];

    fn code(self) -> u8 {
        TxType::ALL.iter().position(|&t| t == self).expect("listed") as u8
    }

    fn from_code(c: u8) -> Result<TxType> {
        TxType::ALL.get(c as usize).copied().ok_or_else(|| LedgerError::Corrupt(format!("bad tx type code {c}")))
    }

    /// Update-type transactions carry off-chain content that must resolve.
    pub fn is_update(self) -> bool {
        matches!(
            self,
            TxType::MedicalRecordUpdate
                | TxType::LabResultsUpdate
                | TxType::SocialContextualUpdate
                | TxType::RiskFactorsForPrediction
                | TxType::PredictionResult
                | TxType::ExpertFeedback
        )
    }

    pub fn is_administrative(self) -> bool {
        matches!(self, TxType::Registration | TxType::CredentialRecovery | TxType::Revocation)
    }

    /// Asset class and action a transaction exercises. Queries name their
    /// asset explicitly and default to medical condition data.
    pub fn access(self, asset: Option<AssetClass>) -> Option<(AssetClass, Action)> {
        use AssetClass::*;
        Some(match self {
            TxType::MedicalRecordUpdate => (MedicalCondition, Action::Write),
            TxType::LabResultsUpdate => (LabPathological, Action::Write),
            TxType::SocialContextualUpdate => (SocialContextual, Action::Write),
            TxType::Query | TxType::QueryResponse => (asset.unwrap_or(MedicalCondition), Action::Read),
            TxType::RiskFactorsForPrediction => (RiskFactors, Action::Write),
            TxType::PredictionResult => (PredictionResult, Action::Write),
            TxType::ExpertFeedback | TxType::ModelStage => (Model, Action::Write),
            TxType::Registration | TxType::CredentialRecovery | TxType::Revocation => return None,
        })
    }
}

impl fmt::Display for TxType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for TxType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TxType::ALL
            .into_iter()
            .find(|t| format!("{t:?}").eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown transaction type '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AssetClass {
    LabPathological,
    MedicalCondition,
    SocialContextual,
    RiskFactors,
    PredictionResult,
    Model,
}

impl AssetClass {
    pub const ALL: [AssetClass; 6] = [
        AssetClass::LabPathological,
        AssetClass::MedicalCondition,
        AssetClass::SocialContextual,
        AssetClass::RiskFactors,
        AssetClass::PredictionResult,
        AssetClass::Model,
    ];

    fn code(self) -> u8 {
        AssetClass::ALL.iter().position(|&a| a == self).expect("listed") as u8
    }

    fn from_code(c: u8) -> Result<AssetClass> {
        AssetClass::ALL.get(c as usize).copied().ok_or_else(|| LedgerError::Corrupt(format!("bad asset code {c}")))
    }
}

impl FromStr for AssetClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AssetClass::ALL
            .into_iter()
            .find(|a| format!("{a:?}").eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown asset class '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Read,
    Write,
}

/// What a participant asks the ledger to record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxDraft {
    pub tx_type: TxType,
    pub actor: String,
    pub subject: String,
    pub asset: Option<AssetClass>,
    pub payload_hash: Option<Hash32>,
    /// Earlier transaction this one answers or follows from.
    pub reference: Option<Hash32>,
    pub metadata: BTreeMap<String, String>,
}

impl TxDraft {
    pub fn new(tx_type: TxType, actor: impl Into<String>, subject: impl Into<String>) -> Self {
        TxDraft {
            tx_type,
            actor: actor.into(),
            subject: subject.into(),
            asset: None,
            payload_hash: None,
            reference: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn payload(mut self, h: Hash32) -> Self {
        self.payload_hash = Some(h);
        self
    }

    pub fn asset(mut self, a: AssetClass) -> Self {
        self.asset = Some(a);
        self
    }

    pub fn reference(mut self, h: Hash32) -> Self {
        self.reference = Some(h);
        self
    }

    pub fn meta(mut self, k: impl Into<String>, v: impl Into<String>) -> Self {
        self.metadata.insert(k.into(), v.into());
        self
    }

    pub fn access(&self) -> Option<(AssetClass, Action)> {
        self.tx_type.access(self.asset)
    }

    fn encode_into(&self, e: &mut Encoder) {
        e.u8(self.tx_type.code()).str(&self.actor).str(&self.subject);
        match self.asset {
            Some(a) => e.u8(1).u8(a.code()),
            None => e.u8(0),
        };
        e.opt_hash(&self.payload_hash).opt_hash(&self.reference).u64(self.metadata.len() as u64);
        for (k, v) in &self.metadata {
            e.str(k).str(v);
        }
    }

    fn decode_from(d: &mut Decoder<'_>) -> Result<TxDraft> {
        let tx_type = TxType::from_code(d.u8()?)?;
        let actor = d.string()?;
        let subject = d.string()?;
        let asset = match d.u8()? {
            0 => None,
            1 => Some(AssetClass::from_code(d.u8()?)?),
            t => return Err(LedgerError::Corrupt(format!("bad option tag {t}"))),
        };
        let payload_hash = d.opt_hash()?;
        let reference = d.opt_hash()?;
        let n = d.u64()?;
        let mut metadata = BTreeMap::new();
        for _ in 0..n {
            let k = d.string()?;
            metadata.insert(k, d.string()?);
        }
        Ok(TxDraft { tx_type, actor, subject, asset, payload_hash, reference, metadata })
    }

    /// Bytes covered by the signature.
    pub fn signing_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new();
        e.str("dmp-tx-draft");
        self.encode_into(&mut e);
        e.finish()
    }

    pub fn sign(self, key: &SigningKey) -> SignedDraft {
        let signature = key.sign(&self.signing_bytes());
        SignedDraft { draft: self, key_pair_id: key.key_pair_id.clone(), signature }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedDraft {
    pub draft: TxDraft,
    pub key_pair_id: String,
    pub signature: Hash32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DenialReason {
    UnknownActor,
    RevokedCredential,
    BadSignature,
    MissingPayload,
    UnresolvedPayload,
    Administrative,
    Policy,
    Authentication,
}

impl DenialReason {
    const ALL: [DenialReason; 8] = [
        DenialReason::UnknownActor,
        DenialReason::RevokedCredential,
        DenialReason::BadSignature,
        DenialReason::MissingPayload,
        DenialReason::UnresolvedPayload,
        DenialReason::Administrative,
        DenialReason::Policy,
        DenialReason::Authentication,
    ];
}

impl fmt::Display for DenialReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DenialReason::UnknownActor => "actor is not a registered participant",
            DenialReason::RevokedCredential => "actor credential is revoked",
            DenialReason::BadSignature => "signature token does not verify",
            DenialReason::MissingPayload => "update transaction without payload hash",
            DenialReason::UnresolvedPayload => "payload hash not found in off-chain store",
            DenialReason::Administrative => "administrative transactions are issued by the certificate authority",
            DenialReason::Policy => "access policy denies this action",
            DenialReason::Authentication => "credential recovery authentication failed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxStatus {
    Accepted,
    Denied(DenialReason),
}

impl TxStatus {
    pub fn is_accepted(&self) -> bool {
        matches!(self, TxStatus::Accepted)
    }
}

/// A sequenced, signed entry as recorded in a block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub tx_id: Hash32,
    pub seq: u64,
    pub timestamp_ms: i64,
    pub draft: TxDraft,
    pub key_pair_id: String,
    pub signature: Hash32,
    pub status: TxStatus,
}

impl Transaction {
    pub fn new(seq: u64, timestamp_ms: i64, signed: SignedDraft, status: TxStatus) -> Transaction {
        let tx_id = Self::compute_id(seq, timestamp_ms, &signed.draft, &signed.key_pair_id, &signed.signature);
        Transaction {
            tx_id,
            seq,
            timestamp_ms,
            draft: signed.draft,
            key_pair_id: signed.key_pair_id,
            signature: signed.signature,
            status,
        }
    }

    pub fn compute_id(seq: u64, timestamp_ms: i64, draft: &TxDraft, key_pair_id: &str, signature: &Hash32) -> Hash32 {
        let mut e = Encoder::new();
        e.str("dmp-tx").u64(seq).i64(timestamp_ms);
        draft.encode_into(&mut e);
        e.str(key_pair_id).hash(signature);
        Hash32::of(&e.finish())
    }

    pub fn tx_type(&self) -> TxType {
        self.draft.tx_type
    }

    pub fn actor(&self) -> &str {
        &self.draft.actor
    }

    pub fn subject(&self) -> &str {
        &self.draft.subject
    }

    pub fn payload_hash(&self) -> Option<Hash32> {
        self.draft.payload_hash
    }

    pub fn is_accepted(&self) -> bool {
        self.status.is_accepted()
    }

    /// True when the transaction concerns `key`: its actor, subject, id,
    /// payload or reference.
    pub fn touches(&self, key: &str) -> bool {
        let d = &self.draft;
        if d.actor == key || d.subject == key {
            return true;
        }
        let Ok(h) = key.parse::<Hash32>() else { return false };
        self.tx_id == h || d.payload_hash == Some(h) || d.reference == Some(h)
    }

    pub(crate) fn encode_into(&self, e: &mut Encoder) {
        e.hash(&self.tx_id).u64(self.seq).i64(self.timestamp_ms);
        self.draft.encode_into(e);
        e.str(&self.key_pair_id).hash(&self.signature);
        match self.status {
            TxStatus::Accepted => e.u8(0),
            TxStatus::Denied(r) => e.u8(1).u8(DenialReason::ALL.iter().position(|&x| x == r).expect("listed") as u8),
        };
    }

    pub(crate) fn decode_from(d: &mut Decoder<'_>) -> Result<Transaction> {
        let tx_id = d.hash()?;
        let seq = d.u64()?;
        let timestamp_ms = d.i64()?;
        let draft = TxDraft::decode_from(d)?;
        let key_pair_id = d.string()?;
        let signature = d.hash()?;
        let status = match d.u8()? {
            0 => TxStatus::Accepted,
            1 => {
                let c = d.u8()?;
                TxStatus::Denied(
                    *DenialReason::ALL.get(c as usize).ok_or_else(|| LedgerError::Corrupt(format!("bad denial code {c}")))?,
                )
            }
            t => return Err(LedgerError::Corrupt(format!("bad status tag {t}"))),
        };
        Ok(Transaction { tx_id, seq, timestamp_ms, draft, key_pair_id, signature, status })
    }

    /// True when the stored id matches the recomputed one.
    pub fn id_is_consistent(&self) -> bool {
        self.tx_id == Self::compute_id(self.seq, self.timestamp_ms, &self.draft, &self.key_pair_id, &self.signature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Transaction {
        let draft = TxDraft::new(TxType::Query, "P1", "P1")
            .asset(AssetClass::LabPathological)
            .reference(Hash32::of(b"r"))
            .meta("note", "x");
        let signed = SignedDraft { draft, key_pair_id: "k".into(), signature: Hash32::of(b"s") };
        Transaction::new(4, 1_700_000_000_000, signed, TxStatus::Denied(DenialReason::Policy))
    }

    #[test]
    fn encode_round_trip() {
        let t = sample();
        let mut e = Encoder::new();
        t.encode_into(&mut e);
        let bytes = e.finish();
        let mut d = Decoder::new(&bytes);
        assert_eq!(Transaction::decode_from(&mut d).unwrap(), t);
        assert!(d.is_empty());
        assert!(t.id_is_consistent());
    }

    #[test]
    fn id_changes_with_content() {
        let mut t = sample();
        t.draft.subject = "P2".into();
        assert!(!t.id_is_consistent());
    }

    #[test]
    fn touches_by_id_and_hash() {
        let t = sample();
        assert!(t.touches("P1"));
        assert!(t.touches(&t.tx_id.to_hex()));
        assert!(t.touches(&Hash32::of(b"r").to_hex()));
        assert!(!t.touches("P9"));
    }

    #[test]
    fn taxonomy() {
        for t in TxType::ALL {
            assert_eq!(TxType::from_code(t.code()).unwrap(), t);
            assert_eq!(t.to_string().parse::<TxType>().unwrap(), t);
            assert_eq!(t.access(None).is_none(), t.is_administrative());
        }
        assert_eq!(TxType::Query.access(Some(AssetClass::Model)), Some((AssetClass::Model, Action::Read)));
        assert!(TxType::LabResultsUpdate.is_update());
        assert!(!TxType::Query.is_update());
    }
}
