//! ElGamal encryption and the split "blind" decryption.
//!
//! In blind decryption the key holder only ever sees `W` and returns
//! `W^SK`; the party holding `V` finishes the decryption alone.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::arith;
use crate::error::{Error, Result};
use crate::keys::{ElgKeyPair, ElgPublicKey, Role};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElgCiphertext {
    pub w: BigUint,
    pub v: BigUint,
    pub under: Role,
}

/// `W^SK mod P`, the decryptor's half of a blind decryption.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindHalf {
    pub value: BigUint,
}

fn in_unit_range(x: &BigUint, modulus: &BigUint) -> bool {
    !x.is_zero() && x < modulus
}

/// Encrypts `m` under `key` with nonce `w`.
pub fn elg_encrypt(m: &BigUint, key: &ElgPublicKey, under: Role, w: &BigUint) -> Result<ElgCiphertext> {
    let p = &key.modulus;
    if !in_unit_range(m, p) {
        return Err(Error::PlaintextEmbedding);
    }
    if w.is_zero() || *w > p - 2u8 {
        return Err(Error::Parameter("nonce outside [1, P-2]".into()));
    }
    let big_w = arith::mod_exp(&key.generator, w, p)?;
    let v = (m * arith::mod_exp(&key.pk, w, p)?) % p;
    Ok(ElgCiphertext { w: big_w, v, under })
}

pub fn elg_decrypt(ct: &ElgCiphertext, key: &ElgKeyPair) -> Result<BigUint> {
    if ct.under != key.owner {
        return Err(Error::Parameter(format!(
            "ciphertext under {} cannot be opened with {}'s key",
            ct.under, key.owner
        )));
    }
    let p = key.modulus();
    if !in_unit_range(&ct.w, p) || !in_unit_range(&ct.v, p) {
        return Err(Error::MalformedCiphertext("component outside (0, P)".into()));
    }
    let shared = arith::mod_exp(&ct.w, &key.sk, p)?;
    let inv = arith::mod_inv(&shared, p).map_err(|_| Error::MalformedCiphertext("W^SK not invertible".into()))?;
    Ok((&ct.v * inv) % p)
}

/// The decryptor's step. Takes only `W`.
pub fn blind_half(w: &BigUint, key: &ElgKeyPair) -> Result<BlindHalf> {
    let p = key.modulus();
    if !in_unit_range(w, p) {
        return Err(Error::Parameter("W outside (0, P)".into()));
    }
    Ok(BlindHalf {
        value: arith::mod_exp(w, &key.sk, p)?,
    })
}

/// The receiver's step: `V * half^-1 mod P`.
pub fn unblind(v: &BigUint, half: &BlindHalf, modulus: &BigUint) -> Result<BigUint> {
    let inv = arith::mod_inv(&half.value, modulus)
        .map_err(|_| Error::MalformedCiphertext("blind half not invertible".into()))?;
    Ok((v * inv) % modulus)
}
