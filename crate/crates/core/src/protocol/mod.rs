//! The three exchange protocols as per-role state machines.
//!
//! * `CommonMessage`: A and B sign the same message.
//! * `LinkedFiles`: each signs its own file linked to the hash of the other's.
//! * `DataForSignature`: B hands over data `M` for A's signature on `H(M)`.
//!
//! All three share the same basic and recovery message flow; only what B
//! hands over, and how each side checks what it receives, differs.

mod party;
mod session;
pub mod wire;

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::arith;
use crate::error::{Error, Result};
use crate::keys::RsaPublicKey;
use crate::rsa;

pub use party::ReceivedOffer;
pub use party::{AParty, BParty, Input, Party, StepOutput, SttpParty};
pub use session::{session_id_for, BItem, Payload, SessionConfig, SessionSetup, DEFAULT_TIMEOUT};
pub use wire::{Body, MsgType, RecoveryFields, SessionId, WireMessage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    CommonMessage,
    LinkedFiles,
    DataForSignature,
}

impl ProtocolKind {
    pub fn cli_name(self) -> &'static str {
        match self {
            ProtocolKind::CommonMessage => "common",
            ProtocolKind::LinkedFiles => "linked",
            ProtocolKind::DataForSignature => "data-for-sig",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "common" => Ok(ProtocolKind::CommonMessage),
            "linked" => Ok(ProtocolKind::LinkedFiles),
            "data-for-sig" => Ok(ProtocolKind::DataForSignature),
            other => Err(Error::Parameter(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pending,
    Success,
    Aborted,
    Recovered,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pending => "pending",
            Verdict::Success => "success",
            Verdict::Aborted => "aborted",
            Verdict::Recovered => "recovered",
        }
    }
}

/// An item a party obtained from its counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Acquired {
    Signature(BigUint),
    Data(Vec<u8>),
}

/// What a party will accept from its counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    /// An RSA signature on this representative under the counterpart's key.
    Signature { rep: BigUint },
    /// Data whose SHA-256 digest is this value.
    DataDigest([u8; 32]),
}

impl Expectation {
    pub fn accepts_signature(&self, s: &BigUint, key: &RsaPublicKey) -> bool {
        match self {
            Expectation::Signature { rep } => rsa::rsa_verify(
                s,
                &rsa::Message {
                    raw: Vec::new(),
                    rep: rep.clone(),
                },
                key,
            ),
            Expectation::DataDigest(_) => false,
        }
    }

    pub fn accepts_data(&self, data: &[u8]) -> bool {
        match self {
            Expectation::DataDigest(d) => check_data_matches(data, &arith::decode(d)),
            Expectation::Signature { .. } => false,
        }
    }
}

/// `m_A = M_A || H(M_B)` and `m_B = M_B || H(M_A)`.
pub fn link_messages(file_a: &[u8], file_b: &[u8]) -> (Vec<u8>, Vec<u8>) {
    let mut m_a = file_a.to_vec();
    m_a.extend_from_slice(&arith::sha256(file_b));
    let mut m_b = file_b.to_vec();
    m_b.extend_from_slice(&arith::sha256(file_a));
    (m_a, m_b)
}

pub fn check_data_matches(data: &[u8], expected_hash: &BigUint) -> bool {
    arith::decode(&arith::sha256(data)) == *expected_hash
}

/// Data as an ElGamal plaintext: the integer `0x01 || data`, so leading zero
/// bytes survive and the plaintext is never zero.
pub fn embed_data(data: &[u8]) -> BigUint {
    let mut bytes = Vec::with_capacity(data.len() + 1);
    bytes.push(1);
    bytes.extend_from_slice(data);
    arith::decode(&bytes)
}

pub fn unembed_data(x: &BigUint) -> Option<Vec<u8>> {
    let bytes = arith::encode(x);
    match bytes.split_first() {
        Some((1, rest)) => Some(rest.to_vec()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linking_empty_files() {
        let (m_a, m_b) = link_messages(b"", b"");
        assert_eq!(m_a, arith::sha256(b"").to_vec());
        assert_eq!(m_a, m_b);
    }

    #[test]
    fn linking_binds_the_other_file() {
        let (m_a, _) = link_messages(b"order", b"invoice");
        let (m_a2, _) = link_messages(b"order", b"invoicf");
        assert_ne!(m_a, m_a2);
        assert_eq!(&m_a[m_a.len() - 32..], &arith::sha256(b"invoice"));
        assert_eq!(&m_a[..5], b"order");
    }

    #[test]
    fn data_matching() {
        let h = arith::decode(&arith::sha256(b"secret"));
        assert!(check_data_matches(b"secret", &h));
        assert!(!check_data_matches(b"secreu", &h));
        assert!(check_data_matches(b"", &arith::decode(&arith::sha256(b""))));
    }

    #[test]
    fn data_embedding_keeps_leading_zeros() {
        for data in [&b""[..], b"\x00\x00x", b"hi"] {
            assert_eq!(unembed_data(&embed_data(data)).unwrap(), data);
        }
        assert_eq!(unembed_data(&BigUint::from(0x0203u32)), None);
    }

    #[test]
    fn protocol_names() {
        for k in [
            ProtocolKind::CommonMessage,
            ProtocolKind::LinkedFiles,
            ProtocolKind::DataForSignature,
        ] {
            assert_eq!(k.cli_name().parse::<ProtocolKind>().unwrap(), k);
        }
    }
}
