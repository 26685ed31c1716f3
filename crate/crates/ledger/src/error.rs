use thiserror::Error;

use crate::hash::Hash32;
use crate::tx::DenialReason;

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("no certificate authority has been bootstrapped")]
    NoCertificateAuthority,

    #[error("a certificate authority already exists")]
    CertificateAuthorityExists,

    #[error("participant '{0}' is already registered")]
    DuplicateParticipant(String),

    #[error("unknown participant '{0}'")]
    UnknownParticipant(String),

    /// Wrong PIN or identity proof during credential recovery.
    #[error("authentication failed for '{0}'")]
    Authentication(String),

    #[error("participant '{0}' has been revoked")]
    Revoked(String),

    /// The transaction was rejected; the rejection itself is on the ledger.
    #[error("transaction {tx_id} denied: {reason}")]
    Denied { tx_id: Hash32, reason: DenialReason },

    #[error("not found: {0}")]
    NotFound(String),

    #[error("payload is empty")]
    EmptyPayload,

    #[error("unknown channel '{0}'")]
    UnknownChannel(String),

    #[error("corrupt ledger data: {0}")]
    Corrupt(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = LedgerError> = std::result::Result<T, E>;
