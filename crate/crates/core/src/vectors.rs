//! Deterministic test vectors: toy-profile keys, certificates, challenges and
//! session transcripts, all derived from a fixed seed.

use std::fmt::Write as _;

use num_bigint::BigUint;

use crate::arith::{self, DetRng};
use crate::cembs::{self, CembsContext, Nonces, SideTag};
use crate::error::Result;
use crate::harness::{fault, run_session};
use crate::keyfile;
use crate::keys::{BitProfile, SystemParams};
use crate::protocol::{Payload, SessionConfig};

pub const VECTOR_SEED: &str = "cembs/test-vectors/v1";

fn h(v: &BigUint) -> String {
    hex::encode(arith::encode(v))
}

pub fn vector_params() -> Result<SystemParams> {
    SystemParams::generate(BitProfile::TOY, &mut DetRng::from_seed_bytes(VECTOR_SEED.as_bytes()))
}

fn certificate_vectors(sp: &SystemParams, rng: &mut DetRng) -> Result<String> {
    let public = sp.public();
    let mut out = String::new();
    for (label, ctx, plain_mod) in [
        ("A", CembsContext::a_side(&public), &sp.a_rsa.public.n),
        ("B", CembsContext::b_side(&public), &sp.b_rsa.public.n),
    ] {
        for i in 0..4 {
            let plaintext = arith::sample_range(&BigUint::from(1u8), plain_mod, rng)?;
            let nonces = Nonces::sample(&ctx, rng)?;
            let o = cembs::cembs_generate(&plaintext, &ctx, &nonces)?;
            let ok = cembs::cembs_verify(&o.ciphertext.w, &o.commitment, &o.certificate, &ctx);
            let _ = writeln!(out, "[{label}-{i}]");
            let _ = writeln!(out, "plaintext={}", h(&plaintext));
            let _ = writeln!(out, "w={}", h(&nonces.w));
            let _ = writeln!(out, "u={}", h(&nonces.u));
            let _ = writeln!(out, "W={}", h(&o.ciphertext.w));
            let _ = writeln!(out, "V={}", h(&o.ciphertext.v));
            let _ = writeln!(out, "C={}", h(&o.commitment.value));
            let _ = writeln!(out, "c={}", hex::encode(cembs::encode_challenge(&o.certificate.c)?));
            let _ = writeln!(out, "r={}", h(&o.certificate.r));
            let _ = writeln!(out, "verify={}\n", if ok { "ok" } else { "fail" });
        }
    }
    Ok(out)
}

fn challenge_vectors() -> String {
    let mut out = String::new();
    let inputs: [&[u32]; 4] = [&[], &[0], &[1, 2, 3, 4, 5], &[65_537, 0, 255, 256, 1 << 31]];
    for tag in [SideTag::A, SideTag::B] {
        for elems in inputs {
            let big: Vec<BigUint> = elems.iter().map(|&x| BigUint::from(x)).collect();
            let refs: Vec<&BigUint> = big.iter().collect();
            let c = cembs::hash_challenge(tag.byte(), &refs);
            let list: Vec<String> = elems.iter().map(|x| format!("{x:x}")).collect();
            let _ = writeln!(out, "{:02x} [{}] {}", tag.byte(), list.join(","), h(&c));
        }
    }
    out
}

/// `(file name, contents)` pairs.
pub fn generate() -> Result<Vec<(String, String)>> {
    let sp = vector_params()?;
    let mut rng = DetRng::from_seed_bytes(VECTOR_SEED.as_bytes()).derive("certificates");
    let mut files = vec![
        ("params.keys".to_string(), keyfile::write_keys(&sp)),
        ("certificates.txt".to_string(), certificate_vectors(&sp, &mut rng)?),
        ("challenges.txt".to_string(), challenge_vectors()),
    ];
    let session_seed: [u8; 32] = arith::sha256(b"cembs/test-vectors/session");
    let sessions = [
        (
            "common",
            Payload::Common {
                message: b"purchase order 1138".to_vec(),
            },
            "none",
        ),
        (
            "common",
            Payload::Common {
                message: b"purchase order 1138".to_vec(),
            },
            "a-silent-step3",
        ),
        (
            "common",
            Payload::Common {
                message: b"purchase order 1138".to_vec(),
            },
            "b-early-dispute",
        ),
        (
            "linked",
            Payload::Linked {
                file_a: b"order".to_vec(),
                file_b: b"invoice".to_vec(),
            },
            "none",
        ),
        ("data", Payload::Data { data: b"k1".to_vec() }, "a-garbage-data"),
    ];
    for (name, payload, script) in sessions {
        let cfg = SessionConfig::new(sp.clone(), payload, session_seed);
        let out = run_session(&cfg, &fault::shipped(script).expect("shipped script"))?;
        files.push((format!("transcript-{name}-{script}.txt"), out.transcript.to_text()));
    }
    Ok(files)
}
