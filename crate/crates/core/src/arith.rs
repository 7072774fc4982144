//! Modular arithmetic, primality, byte encoding and the deterministic RNG.
//!
//! Everything above this module works on [`BigUint`] values and draws its
//! randomness from a [`DetRng`], so a fixed seed reproduces every key,
//! nonce and transcript bit-for-bit.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use num_bigint::BigUint as Uint;

/// Miller-Rabin rounds; 4^-40 = 2^-80 worst-case error.
pub const MILLER_RABIN_ROUNDS: usize = 40;

/// Upper bound (exclusive) of the small-prime table used for trial division.
pub const SMALL_PRIME_BOUND: u32 = 100_000;

/// Seeded ChaCha20 stream. Single owner; derive children instead of sharing.
#[derive(Clone, Debug)]
pub struct DetRng {
    seed: [u8; 32],
    inner: ChaCha20Rng,
}

impl DetRng {
    pub fn from_seed(seed: [u8; 32]) -> Self {
        Self {
            seed,
            inner: ChaCha20Rng::from_seed(seed),
        }
    }

    /// Seeds from arbitrary bytes by hashing them to 32 bytes. A 32-byte
    /// input is used verbatim.
    pub fn from_seed_bytes(bytes: &[u8]) -> Self {
        match <[u8; 32]>::try_from(bytes) {
            Ok(seed) => Self::from_seed(seed),
            Err(_) => Self::from_seed(Sha256::digest(bytes).into()),
        }
    }

    pub fn from_hex(seed: &str) -> Result<Self> {
        let bytes = hex::decode(seed.trim()).map_err(|e| Error::Parameter(format!("seed is not hex: {e}")))?;
        Ok(Self::from_seed_bytes(&bytes))
    }

    pub fn seed(&self) -> &[u8; 32] {
        &self.seed
    }

    /// A fresh stream keyed by this stream's seed and `label`. Independent of
    /// how much of `self` has been consumed.
    pub fn derive(&self, label: &str) -> DetRng {
        let mut h = Sha256::new();
        h.update(self.seed);
        h.update((label.len() as u32).to_be_bytes());
        h.update(label.as_bytes());
        DetRng::from_seed(h.finalize().into())
    }

    pub fn fill(&mut self, buf: &mut [u8]) {
        self.inner.fill_bytes(buf);
    }

    /// Uniform integer with at most `bits` bits.
    pub fn bits(&mut self, bits: u64) -> BigUint {
        if bits == 0 {
            return BigUint::zero();
        }
        let nbytes = bits.div_ceil(8) as usize;
        let mut buf = vec![0u8; nbytes];
        self.fill(&mut buf);
        let excess = (nbytes as u64) * 8 - bits;
        buf[0] &= 0xffu8 >> excess;
        BigUint::from_bytes_be(&buf)
    }

    pub fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
}

pub fn mod_exp(base: &BigUint, exponent: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    check_modulus(modulus)?;
    Ok(base.modpow(exponent, modulus))
}

pub fn mod_inv(x: &BigUint, modulus: &BigUint) -> Result<BigUint> {
    check_modulus(modulus)?;
    let a = BigInt::from_biguint(Sign::Plus, x % modulus);
    let m = BigInt::from_biguint(Sign::Plus, modulus.clone());
    let egcd = a.extended_gcd(&m);
    if !egcd.gcd.is_one() {
        return Err(Error::NotInvertible);
    }
    let inv = egcd.x.mod_floor(&m);
    Ok(inv
        .to_biguint()
        .expect("mod_floor by a positive modulus is non-negative"))
}

fn check_modulus(modulus: &BigUint) -> Result<()> {
    if *modulus < BigUint::from(2u8) {
        return Err(Error::Parameter("modulus must be at least 2".into()));
    }
    Ok(())
}

/// Uniform in `[lo, hi)` by rejection sampling.
pub fn sample_range(lo: &BigUint, hi: &BigUint, rng: &mut DetRng) -> Result<BigUint> {
    if lo >= hi {
        return Err(Error::Parameter("empty sampling range".into()));
    }
    let span = hi - lo;
    let bits = (&span - 1u8).bits();
    loop {
        let x = rng.bits(bits);
        if x < span {
            return Ok(lo + x);
        }
    }
}

/// Primes below [`SMALL_PRIME_BOUND`], ascending.
pub fn small_primes() -> &'static [u32] {
    static TABLE: OnceLock<Vec<u32>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = SMALL_PRIME_BOUND as usize;
        let mut composite = vec![false; n];
        let mut out = Vec::new();
        for i in 2..n {
            if !composite[i] {
                out.push(i as u32);
                let mut j = i * i;
                while j < n {
                    composite[j] = true;
                    j += i;
                }
            }
        }
        out
    })
}

/// Small prime factors of `n`, each listed once, found by trial division
/// below [`SMALL_PRIME_BOUND`].
pub fn small_prime_factors(n: &BigUint) -> Vec<u32> {
    small_primes()
        .iter()
        .copied()
        .filter(|&f| BigUint::from(f) < *n && (n % f).is_zero())
        .collect()
}

/// Trial division by the first primes, then Miller-Rabin with random bases.
pub fn is_probable_prime(n: &BigUint, rng: &mut DetRng) -> bool {
    let two = BigUint::from(2u8);
    if *n < two {
        return false;
    }
    for &p in small_primes().iter().take(300) {
        let p_big = BigUint::from(p);
        if *n == p_big {
            return true;
        }
        if (n % p).is_zero() {
            return false;
        }
    }
    if *n < BigUint::from(small_primes()[299]).pow(2) {
        return true;
    }
    miller_rabin(n, MILLER_RABIN_ROUNDS, rng)
}

fn miller_rabin(n: &BigUint, rounds: usize, rng: &mut DetRng) -> bool {
    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    let two = BigUint::from(2u8);
    'witness: for _ in 0..rounds {
        let a = sample_range(&two, &n_minus_one, rng).expect("n > 3 here");
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// A probable prime of exactly `bits` bits.
pub fn gen_prime(bits: u64, rng: &mut DetRng) -> Result<BigUint> {
    gen_prime_with_top(bits, 1, rng)
}

/// A probable prime of exactly `bits` bits whose `top` most significant bits
/// are all set. `top = 2` puts the prime in `[3 * 2^(bits-2), 2^bits)`.
pub fn gen_prime_with_top(bits: u64, top: u32, rng: &mut DetRng) -> Result<BigUint> {
    if bits < 8 {
        return Err(Error::Parameter("prime size must be at least 8 bits".into()));
    }
    if top == 0 || u64::from(top) >= bits {
        return Err(Error::Parameter("invalid top-bit count".into()));
    }
    loop {
        let mut candidate = rng.bits(bits);
        for i in 0..u64::from(top) {
            candidate.set_bit(bits - 1 - i, true);
        }
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate, rng) {
            return Ok(candidate);
        }
    }
}

/// A safe prime `p = 2q + 1` of exactly `bits` bits (top two bits set).
pub fn gen_safe_prime(bits: u64, rng: &mut DetRng) -> Result<BigUint> {
    if bits < 8 {
        return Err(Error::Parameter("prime size must be at least 8 bits".into()));
    }
    loop {
        let mut q = rng.bits(bits - 1);
        q.set_bit(bits - 2, true);
        q.set_bit(bits - 3, true);
        q.set_bit(0, true);
        // q ≡ 2 (mod 3) is necessary for p = 2q + 1 to avoid 3.
        if (&q % 3u8) != BigUint::from(2u8) {
            continue;
        }
        if !is_probable_prime(&q, rng) {
            continue;
        }
        let p = (&q << 1) + 1u8;
        if is_probable_prime(&p, rng) {
            return Ok(p);
        }
    }
}

/// Minimal big-endian magnitude; zero encodes as the empty string.
pub fn encode(x: &BigUint) -> Vec<u8> {
    if x.is_zero() {
        Vec::new()
    } else {
        x.to_bytes_be()
    }
}

/// Big-endian magnitude left-padded with zeros to `width` bytes.
pub fn encode_fixed(x: &BigUint, width: usize) -> Result<Vec<u8>> {
    let raw = encode(x);
    if raw.len() > width {
        return Err(Error::Parameter(format!(
            "value needs {} bytes, fixed width is {width}",
            raw.len()
        )));
    }
    let mut out = vec![0u8; width - raw.len()];
    out.extend_from_slice(&raw);
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> BigUint {
    BigUint::from_bytes_be(bytes)
}

/// Strict inverse of [`encode`]: rejects leading zero bytes.
pub fn decode_minimal(bytes: &[u8]) -> Result<BigUint> {
    if bytes.first() == Some(&0) {
        return Err(Error::Decode("non-minimal integer encoding".into()));
    }
    Ok(decode(bytes))
}

pub fn sha256(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}
