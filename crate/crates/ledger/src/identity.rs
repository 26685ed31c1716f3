//! Participants, credentials and the certificate authority's key registry.
//!
//! Signature tokens are keyed SHA-256 digests over the signed bytes. The
//! secret for each key pair lives only in the [`Registry`], which plays the
//! part of the certificate authority's key store.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::codec::Encoder;
use crate::error::{LedgerError, Result};
use crate::hash::Hash32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    Hospital,
    AlliedHealthProfessional,
    Pharmacist,
    Patient,
    ExternalUser,
    MedicalExpert,
    CertificateAuthority,
}

impl Role {
    pub const ALL: [Role; 7] = [
        Role::Hospital,
        Role::AlliedHealthProfessional,
        Role::Pharmacist,
        Role::Patient,
        Role::ExternalUser,
        Role::MedicalExpert,
        Role::CertificateAuthority,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Role::Hospital => "hospital",
            Role::AlliedHealthProfessional => "allied-health-professional",
            Role::Pharmacist => "pharmacist",
            Role::Patient => "patient",
            Role::ExternalUser => "external-user",
            Role::MedicalExpert => "medical-expert",
            Role::CertificateAuthority => "certificate-authority",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Role::ALL
            .into_iter()
            .find(|r| r.name() == norm || format!("{r:?}").to_ascii_lowercase() == norm.replace('-', ""))
            .ok_or_else(|| format!("unknown role '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Credential {
    pub key_pair_id: String,
    pub pin_digest: Hash32,
    pub identity_proof_digest: Hash32,
    pub revoked: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub role: Role,
    pub credential: Credential,
}

/// Handed to a participant at registration or recovery; signs drafts.
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigningKey {
    pub participant: String,
    pub key_pair_id: String,
    secret: Hash32,
}

impl fmt::Debug for SigningKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigningKey")
            .field("participant", &self.participant)
            .field("key_pair_id", &self.key_pair_id)
            .finish_non_exhaustive()
    }
}

impl SigningKey {
    pub fn sign(&self, message: &[u8]) -> Hash32 {
        keyed_digest(&self.secret, message)
    }
}

fn keyed_digest(secret: &Hash32, message: &[u8]) -> Hash32 {
    Hash32::of_parts(&[b"dmp-sig\0", &secret.0, message])
}

fn salted(domain: &str, id: &str, secret: &str) -> Hash32 {
    let mut e = Encoder::new();
    e.str(domain).str(id).str(secret);
    Hash32::of(&e.finish())
}

pub fn pin_digest(id: &str, pin: &str) -> Hash32 {
    salted("dmp-pin", id, pin)
}

pub fn identity_proof_digest(id: &str, proof: &str) -> Hash32 {
    salted("dmp-identity-proof", id, proof)
}

/// Participant table plus key secrets, keyed by key-pair id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    participants: BTreeMap<String, Participant>,
    secrets: BTreeMap<String, Hash32>,
    ca: Option<String>,
}

impl Registry {
    pub fn ca(&self) -> Option<&Participant> {
        self.ca.as_ref().and_then(|id| self.participants.get(id))
    }

    pub fn get(&self, id: &str) -> Option<&Participant> {
        self.participants.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.participants.contains_key(id)
    }

    pub fn participants(&self) -> impl Iterator<Item = &Participant> {
        self.participants.values()
    }

    pub fn len(&self) -> usize {
        self.participants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.participants.is_empty()
    }

    /// Adds a participant with a fresh key pair. Fails on duplicate ids and on
    /// a second certificate authority.
    pub fn enroll(&mut self, id: &str, role: Role, identity_proof: &str, pin: &str) -> Result<(Participant, SigningKey)> {
        if id.trim().is_empty() {
            return Err(LedgerError::UnknownParticipant(id.to_string()));
        }
        if self.participants.contains_key(id) {
            return Err(LedgerError::DuplicateParticipant(id.to_string()));
        }
        if role == Role::CertificateAuthority && self.ca.is_some() {
            return Err(LedgerError::CertificateAuthorityExists);
        }
        let key = self.issue_key(id);
        let participant = Participant {
            id: id.to_string(),
            role,
            credential: Credential {
                key_pair_id: key.key_pair_id.clone(),
                pin_digest: pin_digest(id, pin),
                identity_proof_digest: identity_proof_digest(id, identity_proof),
                revoked: false,
            },
        };
        if role == Role::CertificateAuthority {
            self.ca = Some(id.to_string());
        }
        self.participants.insert(id.to_string(), participant.clone());
        Ok((participant, key))
    }

    fn issue_key(&mut self, id: &str) -> SigningKey {
        let secret = Hash32(rand::random());
        let key_pair_id = loop {
            let candidate = hex::encode(rand::random::<[u8; 12]>());
            if !self.secrets.contains_key(&candidate) {
                break candidate;
            }
        };
        self.secrets.insert(key_pair_id.clone(), secret);
        SigningKey { participant: id.to_string(), key_pair_id, secret }
    }

    /// Checks the pin and proof; on success the old key pair is retired and a
    /// new one issued.
    pub fn reissue(&mut self, id: &str, pin: &str, identity_proof: &str) -> Result<SigningKey> {
        let p = self.participants.get(id).ok_or_else(|| LedgerError::UnknownParticipant(id.to_string()))?;
        if p.credential.revoked {
            return Err(LedgerError::Revoked(id.to_string()));
        }
        if p.credential.pin_digest != pin_digest(id, pin)
            || p.credential.identity_proof_digest != identity_proof_digest(id, identity_proof)
        {
            return Err(LedgerError::Authentication(id.to_string()));
        }
        let old = p.credential.key_pair_id.clone();
        self.secrets.remove(&old);
        let key = self.issue_key(id);
        let p = self.participants.get_mut(id).expect("checked above");
        p.credential.key_pair_id = key.key_pair_id.clone();
        Ok(key)
    }

    pub fn revoke(&mut self, id: &str) -> Result<()> {
        let p = self.participants.get_mut(id).ok_or_else(|| LedgerError::UnknownParticipant(id.to_string()))?;
        if p.role == Role::CertificateAuthority {
            return Err(LedgerError::Authentication(id.to_string()));
        }
        p.credential.revoked = true;
        self.secrets.remove(&p.credential.key_pair_id);
        Ok(())
    }

    /// True when `signature` was produced over `message` by the participant's
    /// current, unrevoked key pair `key_pair_id`.
    pub fn verify(&self, participant: &str, key_pair_id: &str, message: &[u8], signature: &Hash32) -> bool {
        let Some(p) = self.participants.get(participant) else { return false };
        if p.credential.revoked || p.credential.key_pair_id != key_pair_id {
            return false;
        }
        self.secrets.get(key_pair_id).is_some_and(|s| keyed_digest(s, message) == *signature)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_parsing() {
        for r in Role::ALL {
            assert_eq!(r.name().parse::<Role>().unwrap(), r);
            assert_eq!(format!("{r:?}").parse::<Role>().unwrap(), r);
        }
        assert!("janitor".parse::<Role>().is_err());
    }

    #[test]
    fn pin_is_never_stored_in_clear() {
        let mut reg = Registry::default();
        let (p, _) = reg.enroll("P1", Role::Patient, "passport-77", "4321").unwrap();
        let json = serde_json::to_string(&reg).unwrap();
        assert!(!json.contains("4321"));
        assert!(!json.contains("passport-77"));
        assert_eq!(p.credential.pin_digest, pin_digest("P1", "4321"));
        assert_ne!(pin_digest("P1", "4321"), pin_digest("P2", "4321"));
    }

    #[test]
    fn signatures_bind_key_and_message() {
        let mut reg = Registry::default();
        let (_, k) = reg.enroll("A", Role::Hospital, "x", "1").unwrap();
        let sig = k.sign(b"m");
        assert!(reg.verify("A", &k.key_pair_id, b"m", &sig));
        assert!(!reg.verify("A", &k.key_pair_id, b"n", &sig));
        assert!(!reg.verify("B", &k.key_pair_id, b"m", &sig));
        let k2 = reg.reissue("A", "1", "x").unwrap();
        assert!(!reg.verify("A", &k.key_pair_id, b"m", &sig));
        assert!(reg.verify("A", &k2.key_pair_id, b"m", &k2.sign(b"m")));
    }

    #[test]
    fn single_certificate_authority() {
        let mut reg = Registry::default();
        reg.enroll("ca", Role::CertificateAuthority, "root", "0").unwrap();
        assert!(matches!(
            reg.enroll("ca2", Role::CertificateAuthority, "root", "0"),
            Err(LedgerError::CertificateAuthorityExists)
        ));
        assert_eq!(reg.ca().unwrap().id, "ca");
    }
}
