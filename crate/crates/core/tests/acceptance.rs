//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Each criterion also has a wall-clock limit.
//!
//! Run with `cargo test -p cembs-core --test acceptance`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use cembs_core::arith::{self, DetRng};
use cembs_core::cembs::{self, BlindCommitment, CembsCertificate, CembsContext, Nonces};
use cembs_core::elgamal::{self, BlindHalf};
use cembs_core::harness::{self, audit, fault, AuditKeys, FaultScript, SessionOutcome};
use cembs_core::keys::{BitProfile, ElgKeyPair, Role, RsaKeyPair, SystemParams};
use cembs_core::protocol::{Acquired, MsgType, Party, Payload, SessionConfig, Verdict};
use cembs_core::rsa::{self, Message, RepMode};
use cembs_core::{vectors, BigUint};

type Check = Result<String, String>;

/// Name, time limit in seconds, check.
type Criterion = (&'static str, u64, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn big(x: u64) -> BigUint {
    BigUint::from(x)
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

fn toy(seed: &[u8]) -> SystemParams {
    SystemParams::generate(BitProfile::TOY, &mut DetRng::from_seed_bytes(seed)).expect("toy setup")
}

fn keys_for(sp: &SystemParams) -> AuditKeys {
    AuditKeys {
        public: sp.public(),
        a_elg: Some(sp.a_elg.clone()),
    }
}

fn audited(cfg: &SessionConfig, script: &FaultScript) -> Result<(SessionOutcome, harness::AuditReport), String> {
    let out = harness::run_session(cfg, script).map_err(|e| e.to_string())?;
    let parsed = harness::Transcript::parse(&out.transcript.to_text()).map_err(|e| e.to_string())?;
    let report = audit(&parsed, &keys_for(&cfg.params)).map_err(|e| e.to_string())?;
    ensure!(report.flags == out.live_flags(), "audit disagrees with party states");
    ensure!(!out.stalled, "session stalled");
    Ok((out, report))
}

fn rsa_round_trip() -> Check {
    let key = RsaKeyPair::from_primes(big(5), big(11)).map_err(|e| e.to_string())?;
    ensure!(
        key.public.n == big(55) && key.public.e == big(3) && key.d == big(27),
        "unexpected toy key"
    );
    for m in 0..55u64 {
        let msg = Message {
            raw: vec![],
            rep: big(m),
        };
        let s = rsa::rsa_sign(&msg, &key, Role::A).map_err(|e| e.to_string())?.s;
        ensure!(rsa::rsa_verify(&s, &msg, &key.public), "verify(sign({m})) = no");
        let roots: Vec<u64> = (0..55).filter(|&x| pow_mod(x, 3, 55) == m).collect();
        ensure!(roots.len() == 1, "{} residues verify for m = {m}", roots.len());
        ensure!(big(roots[0]) == s, "brute force disagrees with sign for m = {m}");
    }
    Ok("55 messages, one valid signature each".into())
}

fn elgamal_round_trip() -> Check {
    let (p, g, sk) = (23u64, 5u64, 6u64);
    let key = ElgKeyPair::from_secret(Role::Sttp, big(p), big(g), big(sk)).map_err(|e| e.to_string())?;
    let pk = pow_mod(g, sk, p);
    let mut pairs = 0;
    for m in 1..p {
        for w in 1..p - 1 {
            let ct = elgamal::elg_encrypt(&big(m), &key.public, Role::Sttp, &big(w)).map_err(|e| e.to_string())?;
            ensure!(ct.w == big(pow_mod(g, w, p)), "W mismatch at ({m}, {w})");
            ensure!(ct.v == big(m * pow_mod(pk, w, p) % p), "V mismatch at ({m}, {w})");
            let plain = elgamal::elg_decrypt(&ct, &key).map_err(|e| e.to_string())?;
            ensure!(plain == big(m), "decrypt(encrypt({m})) = {plain}");
            let half = elgamal::blind_half(&ct.w, &key).map_err(|e| e.to_string())?;
            let unblinded = elgamal::unblind(&ct.v, &half, &big(p)).map_err(|e| e.to_string())?;
            ensure!(unblinded == plain, "blind path differs at ({m}, {w})");
            pairs += 1;
        }
    }
    ensure!(pairs == 462, "covered {pairs} pairs");
    Ok(format!("{pairs} (m, w) pairs"))
}

fn cembs_completeness() -> Check {
    let mut rng = DetRng::from_seed_bytes(b"acceptance/completeness");
    for trial in 0..1000u32 {
        let sp = toy(&trial.to_be_bytes());
        let public = sp.public();
        let msg_bytes = rng.bits(64).to_bytes_be();
        let (ctx, signer) = if trial % 2 == 0 {
            (CembsContext::a_side(&public), &sp.a_rsa)
        } else {
            (CembsContext::b_side(&public), &sp.b_rsa)
        };
        let msg = rsa::message_rep(&msg_bytes, &signer.public.n, RepMode::Hashed).map_err(|e| e.to_string())?;
        let s = rsa::rsa_sign(&msg, signer, Role::A).map_err(|e| e.to_string())?.s;
        let nonces = Nonces::sample(&ctx, &mut rng).map_err(|e| e.to_string())?;
        let o = cembs::cembs_generate(&s, &ctx, &nonces).map_err(|e| e.to_string())?;
        ensure!(
            cembs::cembs_verify(&o.ciphertext.w, &o.commitment, &o.certificate, &ctx),
            "trial {trial} rejected"
        );
    }

    let (p, g, sk) = (23u64, 5u64, 6u64);
    let order = p - 1;
    let pk = pow_mod(g, sk, p);
    let k = pow_mod(g, pk, p);
    let mut cases = 0;
    for u in 0..order {
        for c in 0..order {
            for w in 0..order {
                let big_w = pow_mod(g, w, p);
                let via_lib = cembs::correctness_identity_check(
                    &big(u),
                    &big(c),
                    &big(w),
                    &big(g),
                    &big(big_w),
                    &big(pk),
                    &big(p),
                );
                let r = (u + order * order - c * w % order) % order;
                let first = pow_mod(g, u, p) == pow_mod(g, r, p) * pow_mod(big_w, c, p) % p;
                let second = pow_mod(k, u, p) == pow_mod(k, r, p) * pow_mod(pow_mod(big_w, pk, p), c, p) % p;
                ensure!(
                    via_lib && first && second,
                    "identity fails at (u, c, w) = ({u}, {c}, {w})"
                );
                cases += 1;
            }
        }
    }
    Ok(format!("1000/1000 randomized, {cases} exhaustive identity cases"))
}

/// Canonical `len_be32 || minimal_be` encoding of `(W, C, r, c)`.
fn encode_statement(parts: &[&BigUint]) -> Vec<u8> {
    let mut out = Vec::new();
    for p in parts {
        let b = arith::encode(p);
        out.extend_from_slice(&(b.len() as u32).to_be_bytes());
        out.extend_from_slice(&b);
    }
    out
}

fn decode_statement(mut bytes: &[u8]) -> Option<Vec<BigUint>> {
    let mut out = Vec::new();
    while !bytes.is_empty() {
        let len = u32::from_be_bytes(bytes.get(..4)?.try_into().ok()?) as usize;
        let body = bytes.get(4..4 + len)?;
        out.push(arith::decode(body));
        bytes = &bytes[4 + len..];
    }
    (out.len() == 4).then_some(out)
}

fn tamper_sensitivity() -> Check {
    let mut rng = DetRng::from_seed_bytes(b"acceptance/tamper");
    let mut false_accepts = 0;
    for trial in 0..1000u32 {
        let sp = toy(&(trial + 1_000_000).to_be_bytes());
        let ctx = CembsContext::a_side(&sp.public());
        let s = arith::sample_range(&big(1), &sp.a_rsa.public.n, &mut rng).map_err(|e| e.to_string())?;
        let nonces = Nonces::sample(&ctx, &mut rng).map_err(|e| e.to_string())?;
        let o = cembs::cembs_generate(&s, &ctx, &nonces).map_err(|e| e.to_string())?;
        let mut enc = encode_statement(&[&o.ciphertext.w, &o.commitment.value, &o.certificate.r, &o.certificate.c]);
        let pos = (rng.next_u32() as usize) % enc.len();
        let flip = (rng.next_u32() % 255 + 1) as u8;
        enc[pos] ^= flip;
        if let Some(v) = decode_statement(&enc) {
            let accepted = cembs::cembs_verify(
                &v[0],
                &BlindCommitment { value: v[1].clone() },
                &CembsCertificate {
                    r: v[2].clone(),
                    c: v[3].clone(),
                },
                &ctx,
            );
            if accepted {
                false_accepts += 1;
            }
        }
    }
    ensure!(false_accepts == 0, "{false_accepts} false accepts");
    Ok("1000 corruptions, 0 false accepts".into())
}

fn protocol1_fault_matrix() -> Check {
    let mut runs = 0;
    for seed in 0..4u8 {
        let sp = toy(&[b'm', seed]);
        for name in fault::SIGNATURE_MATRIX {
            let cfg = SessionConfig::new(
                sp.clone(),
                Payload::Common {
                    message: b"sale of lot 7".to_vec(),
                },
                [seed; 32],
            );
            let (out, report) = audited(&cfg, &fault::shipped(name).expect("shipped"))?;
            ensure!(report.flags.fair, "{name} (seed {seed}) unfair:\n{report}");
            for (role, v) in [("A", out.a.verdict()), ("B", out.b.verdict())] {
                ensure!(v != Verdict::Pending, "{name}: {role} never reached a verdict");
            }
            if name == "none" {
                ensure!(out.sttp_messages() == 0, "fault-free run used the STTP");
            }
            let va = out
                .a
                .offer()
                .map(|o| arith::encode(&o.ciphertext.v))
                .ok_or("no offer")?;
            let seen = out
                .transcript
                .records()
                .filter(|r| r.receiver == Role::Sttp)
                .flat_map(|r| r.msg.fields.iter())
                .any(|f| arith::decode(f) == arith::decode(&va));
            ensure!(!seen, "{name}: STTP received V_A");
            if out.b.verdict() == Verdict::Recovered {
                let expect = out.a.signature().ok_or("A never signed")?;
                ensure!(
                    out.b.acquired() == Some(&Acquired::Signature(expect.clone())),
                    "{name}: recovered s_A differs"
                );
            }
            runs += 1;
        }
    }
    Ok(format!("{runs} runs (7 scripts x 4 key sets), all fair"))
}

fn protocol2_linkage() -> Check {
    let sp = toy(b"acceptance/linked");
    let (file_a, file_b) = (b"purchase order".to_vec(), b"invoice 2231".to_vec());
    let mut flipped = file_b.clone();
    flipped[3] ^= 0x20;
    let cfg = SessionConfig::new(
        sp.clone(),
        Payload::Linked {
            file_a: file_a.clone(),
            file_b: file_b.clone(),
        },
        [2; 32],
    );
    let (honest, report) = audited(&cfg, &FaultScript::none())?;
    ensure!(
        report.flags.a_acquired && report.flags.b_acquired && !report.flags.sttp_involved,
        "honest linked run failed"
    );
    let s_a = honest.a.signature().ok_or("A did not sign")?.clone();

    // B's view of his own file differs by one byte.
    let (m_a_view, _) = cembs_core::protocol::link_messages(&file_a, &flipped);
    let rep = rsa::message_rep(&m_a_view, &sp.a_rsa.public.n, RepMode::Hashed).map_err(|e| e.to_string())?;
    ensure!(
        !rsa::rsa_verify(&s_a, &rep, &sp.a_rsa.public),
        "s_A verifies against the altered link"
    );

    let cfg = cfg.with_b_view(Payload::Linked {
        file_a,
        file_b: flipped,
    });
    let (out, report) = audited(&cfg, &FaultScript::none())?;
    ensure!(
        out.b.acquired().is_none(),
        "B accepted A's signature on the original link"
    );
    ensure!(
        out.a.acquired().is_none(),
        "A accepted B's signature on the altered link"
    );
    ensure!(report.flags.fair, "linkage run unfair");
    Ok(format!(
        "A {} / B {}, neither acquired",
        out.a.verdict().name(),
        out.b.verdict().name()
    ))
}

fn protocol3_data_for_signature() -> Check {
    let sp = toy(b"acceptance/data");
    let data = b"k7".to_vec();
    let cfg = SessionConfig::new(sp.clone(), Payload::Data { data: data.clone() }, [3; 32]);
    let (out, report) = audited(&cfg, &FaultScript::none())?;
    ensure!(
        out.a.acquired() == Some(&Acquired::Data(data.clone())),
        "A did not receive M"
    );
    let Some(Acquired::Signature(s)) = out.b.acquired() else {
        return Err("B did not receive a signature".into());
    };
    let digest = arith::decode(&arith::sha256(&data)) % &sp.a_rsa.public.n;
    let msg = Message {
        raw: vec![],
        rep: digest,
    };
    ensure!(
        rsa::rsa_verify(s, &msg, &sp.a_rsa.public),
        "s_A does not verify on H(M)"
    );
    ensure!(
        report.flags.fair && !report.flags.sttp_involved,
        "honest data run not clean"
    );

    // B releases data that does not match the digest A expects.
    let cfg = cfg.with_b_view(Payload::Data { data: b"k8".to_vec() });
    let (out, report) = audited(&cfg, &FaultScript::none())?;
    ensure!(
        out.a.verdict() == Verdict::Aborted,
        "A ended {}",
        out.a.verdict().name()
    );
    let s_a = arith::encode(out.a.signature().ok_or("A never signed")?);
    let leaked = out
        .transcript
        .records()
        .any(|r| r.msg.msg_type == MsgType::FinalSignature || r.msg.fields.contains(&s_a));
    ensure!(!leaked, "s_A appeared on the wire");
    ensure!(report.flags.fair, "mismatch run unfair");
    Ok("honest exchange verified; mismatched M leaves A aborted, s_A off the wire".into())
}

fn paper_profile_smoke() -> Check {
    let sp = SystemParams::generate(BitProfile::PAPER, &mut DetRng::from_seed_bytes(b"acceptance/paper"))
        .map_err(|e| e.to_string())?;
    ensure!(
        sp.a_rsa.p.bits() == 512 && sp.a_elg.public.modulus.bits() == 1024,
        "wrong sizes"
    );
    let cfg = SessionConfig::new(
        sp,
        Payload::Common {
            message: b"paper-scale contract".to_vec(),
        },
        [8; 32],
    );
    let (out, report) = audited(&cfg, &FaultScript::none())?;
    ensure!(
        out.verdicts() == (Verdict::Success, Verdict::Success),
        "verdicts {:?}",
        out.verdicts()
    );
    ensure!(report.flags.fair && !report.flags.sttp_involved, "paper run not clean");
    Ok("512-bit primes, 1024-bit P, fair".into())
}

fn determinism() -> Check {
    let sp = toy(b"acceptance/determinism");
    for name in fault::SIGNATURE_MATRIX {
        let cfg = SessionConfig::new(sp.clone(), Payload::Common { message: b"m".to_vec() }, [9; 32]);
        let script = fault::shipped(name).expect("shipped");
        let a = harness::run_session(&cfg, &script)
            .map_err(|e| e.to_string())?
            .transcript
            .to_text();
        let b = harness::run_session(&cfg, &script)
            .map_err(|e| e.to_string())?
            .transcript
            .to_text();
        let c = harness::run_session_threaded(&cfg, &script)
            .map_err(|e| e.to_string())?
            .transcript
            .to_text();
        ensure!(a == b && b == c, "{name}: transcripts differ between runs");
    }
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let files = vectors::generate().map_err(|e| e.to_string())?;
    for (name, contents) in &files {
        let on_disk = fs::read_to_string(golden.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure!(on_disk == *contents, "golden file {name} is stale");
    }
    Ok(format!(
        "7 scripts replayed identically; {} golden files stable",
        files.len()
    ))
}

fn binding_gap() -> Check {
    let sp = toy(b"acceptance/gap");
    let public = sp.public();
    let ctx = CembsContext::a_side(&public);
    let msg = rsa::message_rep(b"the real contract", &sp.a_rsa.public.n, RepMode::Hashed).map_err(|e| e.to_string())?;
    // Any value below n_A will do; pick one that is not A's signature on msg.
    let not_a_signature = big(2);
    ensure!(
        !rsa::rsa_verify(&not_a_signature, &msg, &sp.a_rsa.public),
        "2 happens to be a signature"
    );
    let nonces = Nonces::sample(&ctx, &mut DetRng::from_seed_bytes(b"gap")).map_err(|e| e.to_string())?;
    let o = cembs::cembs_generate(&not_a_signature, &ctx, &nonces).map_err(|e| e.to_string())?;
    ensure!(
        cembs::cembs_verify(&o.ciphertext.w, &o.commitment, &o.certificate, &ctx),
        "the certificate now binds the plaintext; update the README limitation"
    );
    let half = elgamal::blind_half(&o.ciphertext.w, &sp.sttp_elg).map_err(|e| e.to_string())?;
    let opened = elgamal::unblind(
        &o.ciphertext.v,
        &BlindHalf { value: half.value },
        &public.sttp_elg.modulus,
    )
    .map_err(|e| e.to_string())?;
    ensure!(opened == not_a_signature, "round trip lost the plaintext");
    Ok("non-signature accepted as expected (README: Known limitations, certificate binding)".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("RSA round-trip, n = 55 exhaustive", 1, rsa_round_trip),
        (
            "ElGamal round-trip and blind equivalence, P = 23",
            1,
            elgamal_round_trip,
        ),
        ("CEMBS completeness", 10, cembs_completeness),
        ("CEMBS tamper sensitivity", 10, tamper_sensitivity),
        ("Common-message fault matrix", 5, protocol1_fault_matrix),
        ("Linked-files linkage", 1, protocol2_linkage),
        ("Data-for-signature", 1, protocol3_data_for_signature),
        ("Paper-size smoke run", 60, paper_profile_smoke),
        ("Determinism and golden vectors", 10, determinism),
        ("Certificate binding gap", 1, binding_gap),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let limit = Duration::from_secs(limit);
        let (ok, detail) = match result {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the {}s limit", limit.as_secs())),
            Err(e) => (false, e),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {:>2}. {name} [{:.2}s / {}s]: {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
