//! Certified encrypted signatures.
//!
//! A sender encrypts a value `s` under an ElGamal key as `(W, V)` and attaches
//! a certificate `(r, c)`. The certificate is a Fiat-Shamir style proof that
//! the same nonce `w` produced `W = G^w` and the key-blinding factor, hashed
//! together with the blind commitment `C = g^V mod n_A`. A verifier holding
//! only `(W, C)` can check it, which is what lets the STTP verify without
//! seeing `V`.
//!
//! Note that nothing in the certificate ties `s` to a message or an RSA key:
//! any plaintext certifies. See `tests/acceptance.rs` for the criterion that
//! pins this behaviour.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use sha2::{Digest, Sha256};

use crate::arith::{self, DetRng};
use crate::elgamal::{self, ElgCiphertext};
use crate::error::{Error, Result};
use crate::keys::{CommitBase, ElgPublicKey, PublicParams, Role};

/// Bit length of the commitment nonce `u`.
pub const COMMIT_NONCE_BITS: u64 = 400;

/// Width of the challenge `c` in bytes.
pub const CHALLENGE_BYTES: usize = 32;

/// Domain separation between the two certificate directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideTag {
    /// A's signature, encrypted for the STTP.
    A,
    /// B's item, encrypted for Client A.
    B,
}

impl SideTag {
    pub fn byte(self) -> u8 {
        match self {
            SideTag::A => 0x41,
            SideTag::B => 0x42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CembsCertificate {
    pub r: BigUint,
    pub c: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindCommitment {
    pub value: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CembsContext {
    pub commit_base: CommitBase,
    pub group: ElgPublicKey,
    pub side: SideTag,
    /// Owner of the ElGamal key in `group`.
    pub under: Role,
}

impl CembsContext {
    /// A's certificate: encrypted under the STTP's key.
    pub fn a_side(params: &PublicParams) -> CembsContext {
        CembsContext {
            commit_base: params.commit_base.clone(),
            group: params.sttp_elg.clone(),
            side: SideTag::A,
            under: Role::Sttp,
        }
    }

    /// B's certificate: encrypted under Client A's key.
    pub fn b_side(params: &PublicParams) -> CembsContext {
        CembsContext {
            commit_base: params.commit_base.clone(),
            group: params.a_elg.clone(),
            side: SideTag::B,
            under: Role::A,
        }
    }

    fn order(&self) -> BigUint {
        &self.group.modulus - 1u8
    }

    /// `G^PK mod P`, the second base of the proof.
    fn key_base(&self) -> BigUint {
        self.group.generator.modpow(&self.group.pk, &self.group.modulus)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonces {
    /// Encryption nonce in `[1, P-2]`.
    pub w: BigUint,
    /// Commitment nonce of exactly [`COMMIT_NONCE_BITS`] bits.
    pub u: BigUint,
}

impl Nonces {
    pub fn sample(ctx: &CembsContext, rng: &mut DetRng) -> Result<Nonces> {
        let w = arith::sample_range(&BigUint::one(), &(&ctx.group.modulus - 1u8), rng)?;
        let mut u = rng.bits(COMMIT_NONCE_BITS);
        u.set_bit(COMMIT_NONCE_BITS - 1, true);
        Ok(Nonces { w, u })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CembsOutput {
    pub ciphertext: ElgCiphertext,
    pub commitment: BlindCommitment,
    pub certificate: CembsCertificate,
}

pub fn blind_commit(v: &BigUint, base: &CommitBase) -> BlindCommitment {
    BlindCommitment {
        value: base.g.modpow(v, &base.n_ref),
    }
}

/// SHA-256 over `tag || count || (len_be32 || minimal_be)*`, read big-endian.
pub fn hash_challenge(side_tag: u8, elems: &[&BigUint]) -> BigUint {
    assert!(elems.len() <= usize::from(u8::MAX), "too many challenge inputs");
    let mut h = Sha256::new();
    h.update([side_tag, elems.len() as u8]);
    for e in elems {
        let bytes = arith::encode(e);
        h.update((bytes.len() as u32).to_be_bytes());
        h.update(&bytes);
    }
    BigUint::from_bytes_be(&h.finalize())
}

/// Encrypts `plaintext` under `ctx.group` and certifies the ciphertext.
pub fn cembs_generate(plaintext: &BigUint, ctx: &CembsContext, nonces: &Nonces) -> Result<CembsOutput> {
    let p = &ctx.group.modulus;
    let ciphertext = elgamal::elg_encrypt(plaintext, &ctx.group, ctx.under, &nonces.w)?;
    let commitment = blind_commit(&ciphertext.v, &ctx.commit_base);
    let a = ctx.group.generator.modpow(&nonces.u, p);
    let big_a = ctx.key_base().modpow(&nonces.u, p);
    let c = hash_challenge(
        ctx.side.byte(),
        &[&ctx.commit_base.g, &ciphertext.w, &commitment.value, &a, &big_a],
    );
    let r = response(&nonces.u, &c, &nonces.w, &ctx.order());
    Ok(CembsOutput {
        ciphertext,
        commitment,
        certificate: CembsCertificate { r, c },
    })
}

/// `(u - c*w) mod order`.
fn response(u: &BigUint, c: &BigUint, w: &BigUint, order: &BigUint) -> BigUint {
    let u = u % order;
    let cw = (c * w) % order;
    (u + order - cw) % order
}

/// Recomputes both proof commitments from `(W, r, c)` and checks the hash.
/// `V` is deliberately absent from the inputs.
pub fn cembs_verify(w: &BigUint, commitment: &BlindCommitment, cert: &CembsCertificate, ctx: &CembsContext) -> bool {
    let p = &ctx.group.modulus;
    if w.is_zero() || w >= p {
        return false;
    }
    if commitment.value.is_zero() || commitment.value >= ctx.commit_base.n_ref {
        return false;
    }
    if cert.r >= ctx.order() || cert.c.bits() > (CHALLENGE_BYTES * 8) as u64 {
        return false;
    }
    let a = (ctx.group.generator.modpow(&cert.r, p) * w.modpow(&cert.c, p)) % p;
    let big_a = (ctx.key_base().modpow(&cert.r, p) * w.modpow(&ctx.group.pk, p).modpow(&cert.c, p)) % p;
    let expected = hash_challenge(ctx.side.byte(), &[&ctx.commit_base.g, w, &commitment.value, &a, &big_a]);
    expected == cert.c
}

/// Checks both exponent identities behind certificate completeness for one
/// `(u, c, w)` triple, with `r = (u - c*w) mod (P-1)`.
pub fn correctness_identity_check(
    u: &BigUint,
    c: &BigUint,
    w: &BigUint,
    generator: &BigUint,
    big_w: &BigUint,
    pk: &BigUint,
    p: &BigUint,
) -> bool {
    let order = p - 1u8;
    let r = response(u, c, w, &order);
    identities_hold(u, c, &r, generator, big_w, pk, p)
}

/// The two identities for an explicitly supplied response `r`.
pub fn identities_hold(
    u: &BigUint,
    c: &BigUint,
    r: &BigUint,
    generator: &BigUint,
    big_w: &BigUint,
    pk: &BigUint,
    p: &BigUint,
) -> bool {
    let order = p - 1u8;
    let u = u % &order;
    let lhs = generator.modpow(&u, p);
    let rhs = (generator.modpow(r, p) * big_w.modpow(c, p)) % p;
    if lhs != rhs {
        return false;
    }
    let key_base = generator.modpow(pk, p);
    let lhs = key_base.modpow(&u, p);
    let rhs = (key_base.modpow(r, p) * big_w.modpow(pk, p).modpow(c, p)) % p;
    lhs == rhs
}

/// Encodes `c` at its fixed wire width.
pub fn encode_challenge(c: &BigUint) -> Result<Vec<u8>> {
    arith::encode_fixed(c, CHALLENGE_BYTES)
}

pub fn decode_challenge(bytes: &[u8]) -> Result<BigUint> {
    if bytes.len() != CHALLENGE_BYTES {
        return Err(Error::Decode(format!(
            "challenge must be {CHALLENGE_BYTES} bytes, got {}",
            bytes.len()
        )));
    }
    Ok(arith::decode(bytes))
}
