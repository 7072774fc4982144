use std::sync::Arc;

use proptest::prelude::*;

use cembs_core::arith::DetRng;
use cembs_core::cembs::{self, BlindCommitment, CembsContext, Nonces};
use cembs_core::harness::fault::{Action, CorruptMode, Directive, Trigger};
use cembs_core::harness::{self, audit, AuditKeys, FaultScript, SessionOutcome};
use cembs_core::keys::{BitProfile, Role, SystemParams};
use cembs_core::protocol::{
    Acquired, Input, MsgType, Party, Payload, SessionConfig, SessionSetup, SttpParty, Verdict, WireMessage,
};
use cembs_core::BigUint;

fn toy(seed: u8) -> SystemParams {
    SystemParams::generate(BitProfile::TOY, &mut DetRng::from_seed([seed; 32])).unwrap()
}

fn common(seed: u8) -> SessionConfig {
    SessionConfig::new(
        toy(seed),
        Payload::Common {
            message: b"lease".to_vec(),
        },
        [seed; 32],
    )
}

fn keys(sp: &SystemParams) -> AuditKeys {
    AuditKeys {
        public: sp.public(),
        a_elg: Some(sp.a_elg.clone()),
    }
}

fn recovery_request(out: &SessionOutcome) -> WireMessage {
    out.transcript
        .records()
        .find(|r| r.msg.msg_type == MsgType::RecoveryRequest)
        .expect("a dispute happened")
        .msg
        .clone()
}

#[test]
fn recovered_signatures_equal_direct_signing() {
    let cfg = common(1);
    let out = harness::run_session(&cfg, &harness::fault::shipped("b-early-dispute").unwrap()).unwrap();
    let sp = &cfg.params;
    let setup = SessionSetup::new(&cfg).unwrap();
    let s_a = cembs_core::rsa::rsa_sign(&setup.a_message, &sp.a_rsa, Role::A)
        .unwrap()
        .s;
    assert_eq!(out.b.acquired(), Some(&Acquired::Signature(s_a)));
    assert_eq!(out.b.verdict(), Verdict::Recovered);
    assert_eq!(out.a.verdict(), Verdict::Recovered);
}

#[test]
fn sttp_is_idempotent() {
    let cfg = common(2);
    let out = harness::run_session(&cfg, &harness::fault::shipped("a-silent-step3").unwrap()).unwrap();
    let req = recovery_request(&out);
    let mut sttp = SttpParty::new(Arc::new(SessionSetup::new(&cfg).unwrap()));
    let deliver = || Input::Deliver {
        from: Role::B,
        msg: req.clone(),
    };
    let first = sttp.step(deliver(), 0);
    let second = sttp.step(deliver(), 5);
    assert_eq!(first.send.len(), 2);
    assert_eq!(first.send, second.send);
    assert_eq!(sttp.granted(), 2);
}

#[test]
fn sttp_rejects_tampered_and_incomplete_requests() {
    let cfg = common(3);
    let out = harness::run_session(&cfg, &harness::fault::shipped("a-silent-step3").unwrap()).unwrap();
    let req = recovery_request(&out);
    let setup = Arc::new(SessionSetup::new(&cfg).unwrap());

    let mut variants = Vec::new();
    for index in 0..8 {
        let mut m = req.clone();
        CorruptMode::BitFlip.apply(&mut m.fields[index]);
        variants.push((format!("field {index} flipped"), Role::B, m));
    }
    let mut short = req.clone();
    short.fields.pop();
    variants.push(("missing field".into(), Role::B, short));
    let mut empty = req.clone();
    empty.fields[2].clear();
    variants.push(("empty challenge".into(), Role::B, empty));
    variants.push(("sent by A".into(), Role::A, req.clone()));

    for (what, from, msg) in variants {
        let mut sttp = SttpParty::new(Arc::clone(&setup));
        let reply = sttp.step(Input::Deliver { from, msg }, 0);
        assert!(reply.send.is_empty(), "{what}: STTP replied");
        assert_eq!((sttp.granted(), sttp.rejected()), (0, 1), "{what}");
    }
}

#[test]
fn response_reduced_mod_p_breaks_the_identities() {
    // Reducing r modulo P instead of the group order P - 1 is a plausible
    // slip; at P = 23 it fails for most triples.
    let (p, g, sk) = (BigUint::from(23u8), BigUint::from(5u8), 6u32);
    let pk = g.modpow(&BigUint::from(sk), &p);
    let mut broken = 0;
    for u in 0u32..22 {
        for c in 0u32..22 {
            for w in 1u32..22 {
                let (u, c, w) = (BigUint::from(u), BigUint::from(c), BigUint::from(w));
                let big_w = g.modpow(&w, &p);
                assert!(cembs::correctness_identity_check(&u, &c, &w, &g, &big_w, &pk, &p));
                let wrong_r = (&u + &p * 22u8 - (&c * &w) % &p) % &p;
                if !cembs::identities_hold(&u, &c, &wrong_r, &g, &big_w, &pk, &p) {
                    broken += 1;
                }
            }
        }
    }
    assert!(broken > 0);
}

#[test]
fn commitment_collision_at_toy_scale() {
    // g^V mod n_A only pins V modulo the order of g, which is tiny for
    // 16-bit moduli: a different V' with the same commitment exists.
    let sp = toy(4);
    let public = sp.public();
    let ctx = CembsContext::a_side(&public);
    let nonces = Nonces::sample(&ctx, &mut DetRng::from_seed([4; 32])).unwrap();
    let o = cembs::cembs_generate(&BigUint::from(7u8), &ctx, &nonces).unwrap();
    let base = &public.commit_base;
    let lambda = {
        let (p1, q1) = (&sp.a_rsa.p - 1u8, &sp.a_rsa.q - 1u8);
        num_integer::Integer::lcm(&p1, &q1)
    };
    let other_v = &o.ciphertext.v + &lambda;
    assert_ne!(other_v, o.ciphertext.v);
    let collided = cembs::blind_commit(&other_v, base);
    assert_eq!(collided, o.commitment);
    assert!(cembs::cembs_verify(&o.ciphertext.w, &collided, &o.certificate, &ctx));
}

#[test]
fn losing_the_sttp_reply_to_b_is_unfair() {
    // Fairness assumes the channel to and from the STTP is reliable. If the
    // blind half never reaches B, A still gets B's signature forwarded.
    let cfg = common(5);
    let script = FaultScript::parse("FinalSignature silence_party A\nBlindHalfReply drop").unwrap();
    let out = harness::run_session(&cfg, &script).unwrap();
    let report = audit(&out.transcript, &keys(&cfg.params)).unwrap();
    assert!(report.flags.a_acquired);
    assert!(!report.flags.b_acquired);
    assert!(!report.flags.fair);
    assert_eq!(report.flags, out.live_flags());
}

#[test]
fn corrupted_offer_stops_b_before_anything_is_released() {
    for field in 0..4 {
        let cfg = common(6);
        let script = FaultScript::parse(&format!("CembsOffer corrupt_field {field} bitflip")).unwrap();
        let out = harness::run_session(&cfg, &script).unwrap();
        let report = audit(&out.transcript, &keys(&cfg.params)).unwrap();
        assert_eq!(out.b.verdict(), Verdict::Aborted, "field {field}");
        assert!(!report.flags.a_acquired && !report.flags.b_acquired, "field {field}");
        assert_eq!(out.transcript.records().count(), 1, "field {field}");
    }
}

#[test]
fn verification_rejects_a_foreign_commitment() {
    let sp = toy(7);
    let ctx = CembsContext::b_side(&sp.public());
    let nonces = Nonces::sample(&ctx, &mut DetRng::from_seed([7; 32])).unwrap();
    let o = cembs::cembs_generate(&BigUint::from(99u8), &ctx, &nonces).unwrap();
    let wrong = BlindCommitment {
        value: (&o.commitment.value % (&sp.a_rsa.public.n - 2u8)) + 1u8,
    };
    if wrong != o.commitment {
        assert!(!cembs::cembs_verify(&o.ciphertext.w, &wrong, &o.certificate, &ctx));
    }
}

fn msg_type() -> impl Strategy<Value = MsgType> {
    prop::sample::select(MsgType::ALL.to_vec())
}

fn directive() -> impl Strategy<Value = Directive> {
    let trigger = prop_oneof![(0u64..30).prop_map(Trigger::Tick), msg_type().prop_map(Trigger::Msg)];
    let action = prop_oneof![
        Just(Action::Drop),
        (
            0usize..4,
            prop::sample::select(vec![CorruptMode::BitFlip, CorruptMode::Zero, CorruptMode::Increment])
        )
            .prop_map(|(index, mode)| Action::CorruptField { index, mode }),
        (1u64..20).prop_map(Action::Delay),
        prop::sample::select(Role::ALL.to_vec()).prop_map(Action::SilenceParty),
    ];
    (trigger, action).prop_map(|(trigger, action)| Directive { trigger, action })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn audit_agrees_with_live_state(
        directives in prop::collection::vec(directive(), 0..4),
        seed in 0u8..4,
        data in any::<bool>(),
    ) {
        let payload = if data {
            Payload::Data { data: b"z".to_vec() }
        } else {
            Payload::Common { message: b"x".to_vec() }
        };
        let cfg = SessionConfig::new(toy(seed), payload, [seed; 32]);
        let script = FaultScript { directives };
        let out = harness::run_session(&cfg, &script).unwrap();
        prop_assert!(!out.stalled);
        let text = out.transcript.to_text();
        let parsed = harness::Transcript::parse(&text).unwrap();
        prop_assert_eq!(parsed.to_text(), text);
        let report = audit(&parsed, &keys(&cfg.params)).unwrap();
        prop_assert_eq!(report.flags, out.live_flags());
        prop_assert!(out.a.verdict() != Verdict::Pending && out.b.verdict() != Verdict::Pending);
    }
}
