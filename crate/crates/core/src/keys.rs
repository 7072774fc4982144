//! Key material for Client A, Client B and the STTP, plus system setup and
//! parameter validation.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::One;

use crate::arith::{self, DetRng};
use crate::error::{Error, Result};

/// Resampling budget for every setup loop.
const SETUP_RETRIES: usize = 100_000;

/// The three protocol participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    A,
    B,
    Sttp,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::A, Role::B, Role::Sttp];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::A => "A",
            Role::B => "B",
            Role::Sttp => "STTP",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Role::A),
            "B" => Ok(Role::B),
            "STTP" => Ok(Role::Sttp),
            other => Err(Error::Parameter(format!("unknown role {other:?}"))),
        }
    }
}

/// Named key-size set.
///
/// RSA moduli are drawn from `[2^(2k-1), 3 * 2^(2k-2))` and ElGamal primes
/// from `[3 * 2^(b-2), 2^b)`, so with `b >= 2k` every RSA value embeds below
/// every ElGamal modulus without either side knowing the other's keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitProfile {
    pub name: &'static str,
    pub rsa_prime_bits: u64,
    pub elgamal_bits: u64,
    pub safe_prime: bool,
}

impl BitProfile {
    pub const TOY: BitProfile = BitProfile {
        name: "toy",
        rsa_prime_bits: 8,
        elgamal_bits: 24,
        safe_prime: false,
    };
    pub const TOY_SAFE: BitProfile = BitProfile {
        name: "toy-safe",
        rsa_prime_bits: 8,
        elgamal_bits: 24,
        safe_prime: true,
    };
    pub const PAPER: BitProfile = BitProfile {
        name: "paper",
        rsa_prime_bits: 512,
        elgamal_bits: 1024,
        safe_prime: false,
    };
    pub const PAPER_SAFE: BitProfile = BitProfile {
        name: "paper-safe",
        rsa_prime_bits: 512,
        elgamal_bits: 1024,
        safe_prime: true,
    };

    pub fn by_name(name: &str) -> Result<BitProfile> {
        [Self::TOY, Self::TOY_SAFE, Self::PAPER, Self::PAPER_SAFE]
            .into_iter()
            .find(|p| p.name == name)
            .ok_or_else(|| Error::Parameter(format!("unknown bit profile {name:?}")))
    }

    fn check(&self) -> Result<()> {
        if self.rsa_prime_bits < 8 {
            return Err(Error::Parameter("RSA primes must have at least 8 bits".into()));
        }
        if self.elgamal_bits < 2 * self.rsa_prime_bits {
            return Err(Error::Parameter(
                "ElGamal modulus must be at least as wide as the RSA modulus".into(),
            ));
        }
        Ok(())
    }

    /// Exclusive upper bound on generated RSA moduli.
    fn rsa_modulus_bound(&self) -> BigUint {
        BigUint::from(3u8) << (2 * self.rsa_prime_bits - 2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaPublicKey {
    pub n: BigUint,
    pub e: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RsaKeyPair {
    pub public: RsaPublicKey,
    pub d: BigUint,
    pub p: BigUint,
    pub q: BigUint,
}

impl RsaKeyPair {
    /// Builds a key from two distinct primes, choosing `e = 65537` when it is
    /// admissible and the smallest admissible odd exponent otherwise.
    pub fn from_primes(p: BigUint, q: BigUint) -> Result<RsaKeyPair> {
        if p == q {
            return Err(Error::Setup("RSA primes must differ".into()));
        }
        let phi = (&p - 1u8) * (&q - 1u8);
        let e = choose_public_exponent(&phi)?;
        Self::from_parts(p, q, e)
    }

    pub fn from_parts(p: BigUint, q: BigUint, e: BigUint) -> Result<RsaKeyPair> {
        if p == q {
            return Err(Error::Setup("RSA primes must differ".into()));
        }
        let phi = (&p - 1u8) * (&q - 1u8);
        let d = arith::mod_inv(&e, &phi).map_err(|_| Error::Setup("public exponent not coprime to phi(n)".into()))?;
        Ok(RsaKeyPair {
            public: RsaPublicKey { n: &p * &q, e },
            d,
            p,
            q,
        })
    }

    pub fn n(&self) -> &BigUint {
        &self.public.n
    }

    pub fn phi(&self) -> BigUint {
        (&self.p - 1u8) * (&self.q - 1u8)
    }
}

fn choose_public_exponent(phi: &BigUint) -> Result<BigUint> {
    let f4 = BigUint::from(65_537u32);
    if f4 < *phi && f4.gcd(phi).is_one() {
        return Ok(f4);
    }
    let mut e = BigUint::from(3u8);
    while e < *phi {
        if e.gcd(phi).is_one() {
            return Ok(e);
        }
        e += 2u8;
    }
    Err(Error::Setup("no admissible public exponent".into()))
}

/// Draws primes from `next_prime` until they form a key whose modulus passes
/// `accept`. Equal primes are discarded and redrawn.
pub fn rsa_from_prime_source(
    mut next_prime: impl FnMut() -> Result<BigUint>,
    accept: impl Fn(&BigUint) -> bool,
) -> Result<RsaKeyPair> {
    for _ in 0..SETUP_RETRIES {
        let p = next_prime()?;
        let q = next_prime()?;
        if p == q || !accept(&(&p * &q)) {
            continue;
        }
        let phi = (&p - 1u8) * (&q - 1u8);
        if choose_public_exponent(&phi).is_err() {
            continue;
        }
        return RsaKeyPair::from_primes(p, q);
    }
    Err(Error::Setup("RSA key sampling exhausted its retry budget".into()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElgPublicKey {
    /// Prime modulus `P`.
    pub modulus: BigUint,
    /// Base element `G`.
    pub generator: BigUint,
    /// `PK = G^SK mod P`.
    pub pk: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElgKeyPair {
    pub owner: Role,
    pub public: ElgPublicKey,
    pub sk: BigUint,
}

impl ElgKeyPair {
    pub fn from_secret(owner: Role, modulus: BigUint, generator: BigUint, sk: BigUint) -> Result<Self> {
        let pk = arith::mod_exp(&generator, &sk, &modulus)?;
        Ok(ElgKeyPair {
            owner,
            public: ElgPublicKey { modulus, generator, pk },
            sk,
        })
    }

    pub fn modulus(&self) -> &BigUint {
        &self.public.modulus
    }
}

/// The public base `g` of the blind commitment, living modulo `n_A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitBase {
    pub g: BigUint,
    pub n_ref: BigUint,
}

impl CommitBase {
    /// Uniform over coprime residues of `n`, excluding `1` and `n - 1`.
    pub fn sample(n: &BigUint, rng: &mut DetRng) -> Result<CommitBase> {
        let lo = BigUint::from(2u8);
        let hi = n - 1u8;
        for _ in 0..SETUP_RETRIES {
            let g = arith::sample_range(&lo, &hi, rng)?;
            if g.gcd(n).is_one() {
                return Ok(CommitBase { g, n_ref: n.clone() });
            }
        }
        Err(Error::Setup(
            "commitment base sampling exhausted its retry budget".into(),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemParams {
    pub profile: BitProfile,
    pub a_rsa: RsaKeyPair,
    pub b_rsa: RsaKeyPair,
    pub a_elg: ElgKeyPair,
    pub sttp_elg: ElgKeyPair,
    pub commit_base: CommitBase,
}

/// Everything a verifier or auditor may know.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicParams {
    pub profile: BitProfile,
    pub a_rsa: RsaPublicKey,
    pub b_rsa: RsaPublicKey,
    pub a_elg: ElgPublicKey,
    pub sttp_elg: ElgPublicKey,
    pub commit_base: CommitBase,
}

impl SystemParams {
    /// Runs the setup of all three parties from one seeded stream.
    pub fn generate(profile: BitProfile, rng: &mut DetRng) -> Result<SystemParams> {
        let (a_rsa, a_elg, commit_base) = init_client_a(profile, rng)?;
        let b_rsa = init_client_b(profile, rng)?;
        let sttp_elg = init_sttp(profile, rng)?;
        Ok(SystemParams {
            profile,
            a_rsa,
            b_rsa,
            a_elg,
            sttp_elg,
            commit_base,
        })
    }

    pub fn public(&self) -> PublicParams {
        PublicParams {
            profile: self.profile,
            a_rsa: self.a_rsa.public.clone(),
            b_rsa: self.b_rsa.public.clone(),
            a_elg: self.a_elg.public.clone(),
            sttp_elg: self.sttp_elg.public.clone(),
            commit_base: self.commit_base.clone(),
        }
    }
}

fn generate_rsa(profile: BitProfile, rng: &mut DetRng) -> Result<RsaKeyPair> {
    profile.check()?;
    let k = profile.rsa_prime_bits;
    let bound = profile.rsa_modulus_bound();
    rsa_from_prime_source(|| arith::gen_prime(k, rng), |n| n.bits() == 2 * k && *n < bound)
}

fn generate_elgamal(owner: Role, profile: BitProfile, rng: &mut DetRng) -> Result<ElgKeyPair> {
    profile.check()?;
    let bits = profile.elgamal_bits;
    let modulus = if profile.safe_prime {
        arith::gen_safe_prime(bits, rng)?
    } else {
        arith::gen_prime_with_top(bits, 2, rng)?
    };
    let generator = choose_generator(&modulus, rng)?;
    let sk = arith::sample_range(&BigUint::one(), &(&modulus - 1u8), rng)?;
    ElgKeyPair::from_secret(owner, modulus, generator, sk)
}

/// A base in `[2, P-2]` that is not in any subgroup of small prime index.
fn choose_generator(modulus: &BigUint, rng: &mut DetRng) -> Result<BigUint> {
    let order = modulus - 1u8;
    let cofactors: Vec<BigUint> = arith::small_prime_factors(&order)
        .into_iter()
        .map(|f| &order / f)
        .collect();
    let lo = BigUint::from(2u8);
    for _ in 0..SETUP_RETRIES {
        let g = arith::sample_range(&lo, &order, rng)?;
        if cofactors.iter().all(|c| !g.modpow(c, modulus).is_one()) {
            return Ok(g);
        }
    }
    Err(Error::Setup("generator sampling exhausted its retry budget".into()))
}

pub fn init_client_a(profile: BitProfile, rng: &mut DetRng) -> Result<(RsaKeyPair, ElgKeyPair, CommitBase)> {
    let rsa = generate_rsa(profile, rng)?;
    let commit = CommitBase::sample(rsa.n(), rng)?;
    let elg = generate_elgamal(Role::A, profile, rng)?;
    Ok((rsa, elg, commit))
}

pub fn init_client_b(profile: BitProfile, rng: &mut DetRng) -> Result<RsaKeyPair> {
    generate_rsa(profile, rng)
}

pub fn init_sttp(profile: BitProfile, rng: &mut DetRng) -> Result<ElgKeyPair> {
    generate_elgamal(Role::Sttp, profile, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    RsaStructure,
    RsaExponent,
    ElgamalGroup,
    KeyConsistency,
    GeneratorOrder,
    CommitBase,
    PlaintextEmbedding,
}

impl ViolationKind {
    pub fn label(self) -> &'static str {
        match self {
            ViolationKind::RsaStructure => "rsa structure",
            ViolationKind::RsaExponent => "rsa exponent",
            ViolationKind::ElgamalGroup => "elgamal group",
            ViolationKind::KeyConsistency => "key consistency",
            ViolationKind::GeneratorOrder => "generator order",
            ViolationKind::CommitBase => "commit base",
            ViolationKind::PlaintextEmbedding => "plaintext embedding",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub party: Role,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.kind.label(), self.party, self.detail)
    }
}

/// Every violated setup invariant; empty iff the parameters are sound.
pub fn validate_params(sp: &SystemParams) -> Vec<Violation> {
    // Primality checks need randomness; a fixed stream keeps the result a
    // pure function of the parameters.
    let mut rng = DetRng::from_seed_bytes(b"cembs/validate_params");
    let mut out = Vec::new();
    let mut push = |kind, party, detail: &str| {
        out.push(Violation {
            kind,
            party,
            detail: detail.to_string(),
        })
    };

    for (role, key) in [(Role::A, &sp.a_rsa), (Role::B, &sp.b_rsa)] {
        if key.p == key.q {
            push(ViolationKind::RsaStructure, role, "p = q");
        }
        if !arith::is_probable_prime(&key.p, &mut rng) || !arith::is_probable_prime(&key.q, &mut rng) {
            push(ViolationKind::RsaStructure, role, "p or q composite");
        }
        if key.public.n != &key.p * &key.q {
            push(ViolationKind::RsaStructure, role, "n != p*q");
        }
        let phi = key.phi();
        let e = &key.public.e;
        if *e <= BigUint::one() || *e >= phi || !e.gcd(&phi).is_one() {
            push(ViolationKind::RsaExponent, role, "e not a unit below phi(n)");
        } else if !((e * &key.d) % &phi).is_one() {
            push(ViolationKind::RsaExponent, role, "e*d != 1 mod phi(n)");
        }
    }

    for key in [&sp.a_elg, &sp.sttp_elg] {
        let role = key.owner;
        let ElgPublicKey { modulus, generator, pk } = &key.public;
        if !arith::is_probable_prime(modulus, &mut rng) {
            push(ViolationKind::ElgamalGroup, role, "P composite");
            continue;
        }
        if *generator <= BigUint::one() || generator >= modulus {
            push(ViolationKind::ElgamalGroup, role, "G outside (1, P)");
            continue;
        }
        if key.sk < BigUint::one() || key.sk > modulus - 2u8 {
            push(ViolationKind::KeyConsistency, role, "SK outside [1, P-2]");
        }
        if generator.modpow(&key.sk, modulus) != *pk {
            push(ViolationKind::KeyConsistency, role, "PK != G^SK mod P");
        }
        let order = modulus - 1u8;
        if arith::small_prime_factors(&order)
            .into_iter()
            .any(|f| generator.modpow(&(&order / f), modulus).is_one())
        {
            push(ViolationKind::GeneratorOrder, role, "G lies in a small-index subgroup");
        }
    }
    if sp.a_elg.owner != Role::A || sp.sttp_elg.owner != Role::Sttp {
        push(ViolationKind::KeyConsistency, Role::A, "ElGamal key owners mislabelled");
    }

    let cb = &sp.commit_base;
    if cb.n_ref != sp.a_rsa.public.n {
        push(ViolationKind::CommitBase, Role::A, "g does not live modulo n_A");
    }
    if !cb.g.gcd(&cb.n_ref).is_one() || cb.g.is_one() || cb.g == &cb.n_ref - 1u8 || cb.g >= cb.n_ref {
        push(ViolationKind::CommitBase, Role::A, "g not a non-trivial unit");
    }

    if sp.a_rsa.public.n >= sp.sttp_elg.public.modulus {
        push(ViolationKind::PlaintextEmbedding, Role::A, "n_A >= P_T");
    }
    if sp.b_rsa.public.n >= sp.a_elg.public.modulus {
        push(ViolationKind::PlaintextEmbedding, Role::B, "n_B >= P_A");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(x: u64) -> BigUint {
        BigUint::from(x)
    }

    fn toy() -> SystemParams {
        SystemParams::generate(BitProfile::TOY, &mut DetRng::from_seed([1; 32])).unwrap()
    }

    #[test]
    fn toy_setup_is_valid() {
        let sp = toy();
        assert_eq!(validate_params(&sp), vec![]);
        assert_eq!(sp.a_rsa.p.bits(), 8);
        assert_eq!(sp.a_elg.modulus().bits(), 24);
        assert!(sp.a_rsa.public.n < sp.sttp_elg.public.modulus);
        assert!(sp.b_rsa.public.n < sp.a_elg.public.modulus);
    }

    #[test]
    fn many_toy_setups_are_valid() {
        for seed in 0..40u8 {
            let sp = SystemParams::generate(BitProfile::TOY, &mut DetRng::from_seed([seed; 32])).unwrap();
            assert_eq!(validate_params(&sp), vec![], "seed {seed}");
        }
        let sp = SystemParams::generate(BitProfile::TOY_SAFE, &mut DetRng::from_seed([3; 32])).unwrap();
        assert_eq!(validate_params(&sp), vec![]);
    }

    #[test]
    fn setup_is_deterministic() {
        assert_eq!(toy(), toy());
    }

    #[test]
    fn client_b_exponent_inverts() {
        let b = init_client_b(BitProfile::TOY, &mut DetRng::from_seed([9; 32])).unwrap();
        assert!(((&b.public.e * &b.d) % b.phi()).is_one());
    }

    #[test]
    fn equal_primes_are_redrawn() {
        let mut script = vec![u(11), u(11), u(5), u(11)].into_iter();
        let key = rsa_from_prime_source(|| Ok(script.next().unwrap()), |_| true).unwrap();
        assert_eq!(key.public.n, u(55));
        assert_eq!(key.public.e, u(3));
        assert_eq!(key.d, u(27));
        assert!(RsaKeyPair::from_primes(u(11), u(11)).is_err());
    }

    #[test]
    fn sttp_toy_key() {
        let k = ElgKeyPair::from_secret(Role::Sttp, u(23), u(5), u(6)).unwrap();
        assert_eq!(k.public.pk, u(8));
        assert_eq!(arith::mod_exp(&u(5), &k.sk, &u(23)).unwrap(), k.public.pk);
    }

    #[test]
    fn validation_reports_embedding_and_consistency() {
        let mut sp = toy();
        sp.sttp_elg.public.modulus = sp.a_rsa.public.n.clone() - 1u8;
        let kinds: Vec<_> = validate_params(&sp).into_iter().map(|v| v.kind).collect();
        assert!(kinds.contains(&ViolationKind::PlaintextEmbedding));

        let mut sp = toy();
        sp.a_elg.public.pk += 1u8;
        let v = validate_params(&sp);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind.label(), "key consistency");
    }

    #[test]
    fn validation_flags_bad_commit_base() {
        let mut sp = toy();
        sp.commit_base.g = sp.a_rsa.p.clone();
        let v = validate_params(&sp);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::CommitBase);
    }

    #[test]
    fn profile_lookup() {
        assert_eq!(BitProfile::by_name("paper").unwrap().elgamal_bits, 1024);
        assert!(BitProfile::by_name("huge").is_err());
        let bad = BitProfile {
            name: "bad",
            rsa_prime_bits: 16,
            elgamal_bits: 24,
            safe_prime: false,
        };
        assert!(init_sttp(bad, &mut DetRng::from_seed([0; 32])).is_err());
    }
}
