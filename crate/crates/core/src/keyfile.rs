//! Key files: one `ROLE.field=hex` line per value.
//!
//! ```text
//! # cembs keys v1
//! profile=toy
//! A.n=...  A.e  A.d  A.p  A.q  A.P  A.G  A.SK  A.PK  A.g
//! B.n  B.e  B.d  B.p  B.q
//! STTP.P  STTP.G  STTP.SK  STTP.PK
//! ```
//!
//! A public export omits `d`, `p`, `q` and `SK`. Private values are checked
//! against the public ones when read back.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigUint;

use crate::arith;
use crate::error::{Error, Result};
use crate::keys::{
    BitProfile, CommitBase, ElgKeyPair, ElgPublicKey, PublicParams, Role, RsaKeyPair, RsaPublicKey, SystemParams,
};

const MAGIC: &str = "# cembs keys v1";

const PRIVATE: [&str; 7] = ["A.d", "A.p", "A.q", "A.SK", "B.d", "B.p", "B.q"];
const PRIVATE_STTP: &str = "STTP.SK";

/// Parsed key material: always the public parameters, plus whatever private
/// parts the file held.
#[derive(Debug, Clone)]
pub struct KeyMaterial {
    pub public: PublicParams,
    /// Present when every private value is in the file.
    pub full: Option<SystemParams>,
    /// A's ElGamal key pair, when `A.SK` is present.
    pub a_elg: Option<ElgKeyPair>,
}

fn put(out: &mut String, role: Role, field: &str, v: &BigUint) {
    let _ = writeln!(out, "{role}.{field}={}", hex::encode(arith::encode(v)));
}

fn write_public(out: &mut String, pp: &PublicParams) {
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "profile={}", pp.profile.name);
    put(out, Role::A, "n", &pp.a_rsa.n);
    put(out, Role::A, "e", &pp.a_rsa.e);
    put(out, Role::A, "P", &pp.a_elg.modulus);
    put(out, Role::A, "G", &pp.a_elg.generator);
    put(out, Role::A, "PK", &pp.a_elg.pk);
    put(out, Role::A, "g", &pp.commit_base.g);
    put(out, Role::B, "n", &pp.b_rsa.n);
    put(out, Role::B, "e", &pp.b_rsa.e);
    put(out, Role::Sttp, "P", &pp.sttp_elg.modulus);
    put(out, Role::Sttp, "G", &pp.sttp_elg.generator);
    put(out, Role::Sttp, "PK", &pp.sttp_elg.pk);
}

pub fn write_public_keys(pp: &PublicParams) -> String {
    let mut out = String::new();
    write_public(&mut out, pp);
    out
}

pub fn write_keys(sp: &SystemParams) -> String {
    let mut out = String::new();
    write_public(&mut out, &sp.public());
    put(&mut out, Role::A, "d", &sp.a_rsa.d);
    put(&mut out, Role::A, "p", &sp.a_rsa.p);
    put(&mut out, Role::A, "q", &sp.a_rsa.q);
    put(&mut out, Role::A, "SK", &sp.a_elg.sk);
    put(&mut out, Role::B, "d", &sp.b_rsa.d);
    put(&mut out, Role::B, "p", &sp.b_rsa.p);
    put(&mut out, Role::B, "q", &sp.b_rsa.q);
    put(&mut out, Role::Sttp, "SK", &sp.sttp_elg.sk);
    out
}

pub fn parse_keys(text: &str) -> Result<KeyMaterial> {
    let mut values: BTreeMap<String, (usize, BigUint)> = BTreeMap::new();
    let mut profile = None;
    let mut saw_magic = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        let err = |reason: String| Error::KeyFile { line: line_no, reason };
        if line == MAGIC {
            saw_magic = true;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected key=value".into()))?;
        if key == "profile" {
            profile = Some(BitProfile::by_name(value).map_err(|e| err(e.to_string()))?);
            continue;
        }
        let (role, field) = key
            .split_once('.')
            .ok_or_else(|| err(format!("expected ROLE.field, got {key:?}")))?;
        let role: Role = role.parse().map_err(|e: Error| err(e.to_string()))?;
        let allowed: &[&str] = match role {
            Role::A => &["n", "e", "d", "p", "q", "P", "G", "SK", "PK", "g"],
            Role::B => &["n", "e", "d", "p", "q"],
            Role::Sttp => &["P", "G", "SK", "PK"],
        };
        if !allowed.contains(&field) {
            return Err(err(format!("{role} has no field {field:?}")));
        }
        let bytes = hex::decode(value).map_err(|e| err(format!("bad hex: {e}")))?;
        if values
            .insert(key.to_string(), (line_no, BigUint::from_bytes_be(&bytes)))
            .is_some()
        {
            return Err(err(format!("duplicate {key}")));
        }
    }
    if !saw_magic {
        return Err(Error::KeyFile {
            line: 1,
            reason: format!("missing {MAGIC:?} header"),
        });
    }
    let profile = profile.ok_or(Error::KeyFile {
        line: 0,
        reason: "missing profile".into(),
    })?;
    let get = |k: &str| -> Result<BigUint> {
        values.get(k).map(|(_, v)| v.clone()).ok_or_else(|| Error::KeyFile {
            line: 0,
            reason: format!("missing {k}"),
        })
    };
    let public = PublicParams {
        profile,
        a_rsa: RsaPublicKey {
            n: get("A.n")?,
            e: get("A.e")?,
        },
        b_rsa: RsaPublicKey {
            n: get("B.n")?,
            e: get("B.e")?,
        },
        a_elg: ElgPublicKey {
            modulus: get("A.P")?,
            generator: get("A.G")?,
            pk: get("A.PK")?,
        },
        sttp_elg: ElgPublicKey {
            modulus: get("STTP.P")?,
            generator: get("STTP.G")?,
            pk: get("STTP.PK")?,
        },
        commit_base: CommitBase {
            g: get("A.g")?,
            n_ref: get("A.n")?,
        },
    };

    let mismatch = |k: &str| {
        let line = values.get(k).map_or(0, |(l, _)| *l);
        Error::KeyFile {
            line,
            reason: format!("{k} does not match the public values"),
        }
    };
    let elg = |owner: Role, prefix: &str, pk: &ElgPublicKey| -> Result<Option<ElgKeyPair>> {
        let key = format!("{prefix}.SK");
        let Ok(sk) = get(&key) else { return Ok(None) };
        let pair =
            ElgKeyPair::from_secret(owner, pk.modulus.clone(), pk.generator.clone(), sk).map_err(|_| mismatch(&key))?;
        if pair.public != *pk {
            return Err(mismatch(&key));
        }
        Ok(Some(pair))
    };
    let a_elg = elg(Role::A, "A", &public.a_elg)?;
    let sttp_elg = elg(Role::Sttp, "STTP", &public.sttp_elg)?;

    let rsa = |prefix: &str, pk: &RsaPublicKey| -> Result<Option<RsaKeyPair>> {
        let (Ok(p), Ok(q), Ok(d)) = (
            get(&format!("{prefix}.p")),
            get(&format!("{prefix}.q")),
            get(&format!("{prefix}.d")),
        ) else {
            return Ok(None);
        };
        let pair = RsaKeyPair::from_parts(p, q, pk.e.clone()).map_err(|_| mismatch(&format!("{prefix}.p")))?;
        if pair.public != *pk {
            return Err(mismatch(&format!("{prefix}.p")));
        }
        if pair.d != d {
            return Err(mismatch(&format!("{prefix}.d")));
        }
        Ok(Some(pair))
    };
    let a_rsa = rsa("A", &public.a_rsa)?;
    let b_rsa = rsa("B", &public.b_rsa)?;

    let have_all = PRIVATE.iter().chain([&PRIVATE_STTP]).all(|k| values.contains_key(*k));
    let full = match (have_all, a_rsa, b_rsa, a_elg.clone(), sttp_elg) {
        (true, Some(a_rsa), Some(b_rsa), Some(a_elg), Some(sttp_elg)) => Some(SystemParams {
            profile,
            a_rsa,
            b_rsa,
            a_elg,
            sttp_elg,
            commit_base: public.commit_base.clone(),
        }),
        _ => None,
    };
    Ok(KeyMaterial { public, full, a_elg })
}
