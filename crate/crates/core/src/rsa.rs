//! Textbook RSA signatures over integer message representatives.

use num_bigint::BigUint;

use crate::arith;
use crate::error::{Error, Result};
use crate::keys::{Role, RsaKeyPair, RsaPublicKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepMode {
    /// The raw bytes, read big-endian, are the representative.
    Direct,
    /// SHA-256 of the raw bytes, read big-endian and reduced mod `n`.
    Hashed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub raw: Vec<u8>,
    pub rep: BigUint,
}

impl Message {
    pub fn new(raw: &[u8], n: &BigUint, mode: RepMode) -> Result<Message> {
        message_rep(raw, n, mode)
    }
}

pub fn message_rep(raw: &[u8], n: &BigUint, mode: RepMode) -> Result<Message> {
    let rep = match mode {
        RepMode::Direct => {
            let rep = arith::decode(raw);
            if rep >= *n {
                return Err(Error::Domain);
            }
            rep
        }
        RepMode::Hashed => arith::decode(&arith::sha256(raw)) % n,
    };
    Ok(Message { raw: raw.to_vec(), rep })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    pub s: BigUint,
    pub signer: Role,
}

pub fn rsa_sign(m: &Message, key: &RsaKeyPair, signer: Role) -> Result<Signature> {
    if m.rep >= key.public.n {
        return Err(Error::Domain);
    }
    Ok(Signature {
        s: arith::mod_exp(&m.rep, &key.d, &key.public.n)?,
        signer,
    })
}

/// `s^e mod n == m.rep`; anything malformed is simply a rejection.
pub fn rsa_verify(s: &BigUint, m: &Message, key: &RsaPublicKey) -> bool {
    if *s >= key.n || m.rep >= key.n {
        return false;
    }
    match arith::mod_exp(s, &key.e, &key.n) {
        Ok(v) => v == m.rep,
        Err(_) => false,
    }
}
