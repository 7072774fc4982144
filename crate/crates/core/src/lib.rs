//! RSA-based certified encrypted signatures (CEMBS) and the fair-exchange
//! protocols built on them, with an offline semi-trusted third party (STTP)
//! that recovers exchanges through blind ElGamal decryption.
//!
//! Layering, bottom up:
//!
//! * [`arith`]: modular arithmetic, primes, byte encodings, seeded RNG
//! * [`keys`]: setup of Client A, Client B and the STTP
//! * [`rsa`], [`elgamal`]: the two underlying schemes
//! * [`cembs`]: certificate generation and blind verification
//! * [`protocol`]: per-role state machines for the three exchange variants
//! * [`harness`]: simulated transport, fault scripts, transcripts and audit
//! * [`keyfile`], [`vectors`]: key file format and deterministic test vectors

pub mod arith;
pub mod cembs;
pub mod elgamal;
pub mod error;
pub mod harness;
pub mod keyfile;
pub mod keys;
pub mod protocol;
pub mod rsa;
pub mod vectors;

pub use arith::DetRng;
pub use error::{Error, Result};
pub use keys::{BitProfile, PublicParams, Role, SystemParams};
pub use num_bigint::BigUint;
