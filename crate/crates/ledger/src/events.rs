//! Notifications derived from accepted transactions.

use serde::{Deserialize, Serialize};

use crate::block::Block;
use crate::hash::Hash32;
use crate::identity::Role;
use crate::tx::{Transaction, TxType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recipient {
    Participant(String),
    Role(Role),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub tx_id: Hash32,
    pub seq: u64,
    pub tx_type: TxType,
    pub recipient: Recipient,
    pub subject: String,
}

/// The event a transaction raises, if any. Denied entries raise none.
pub fn event_for(tx: &Transaction) -> Option<Event> {
    if !tx.is_accepted() {
        return None;
    }
    let recipient = match tx.tx_type() {
        TxType::MedicalRecordUpdate | TxType::LabResultsUpdate => Recipient::Participant(tx.subject().to_string()),
        TxType::SocialContextualUpdate | TxType::RiskFactorsForPrediction | TxType::PredictionResult => {
            Recipient::Role(Role::Hospital)
        }
        _ => return None,
    };
    Some(Event {
        tx_id: tx.tx_id,
        seq: tx.seq,
        tx_type: tx.tx_type(),
        recipient,
        subject: tx.subject().to_string(),
    })
}

/// Regenerates the event log of a chain from its transactions.
pub fn replay_events(blocks: &[Block]) -> Vec<Event> {
    blocks.iter().flat_map(|b| b.txs.iter()).filter_map(event_for).collect()
}
