//! Offline re-check of a transcript.
//!
//! The audit replays what each client could conclude from the messages it was
//! delivered, using the same acceptance rules the state machines apply:
//!
//! * A holds B's item if any counter item delivered to her verifies, or a
//!   forwarded ciphertext decrypts (under `SK_A`) to one that does.
//! * B holds A's signature if a valid `FinalSignature` reaches him after an
//!   offer, or a blind half unblinds, against the first offer he received and
//!   only if that offer verified, to one.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;

use super::transcript::{Record, Transcript};
use crate::arith;
use crate::cembs::{self, CembsCertificate, CembsContext};
use crate::elgamal::{self, BlindHalf, ElgCiphertext};
use crate::error::{Error, Result};
use crate::keys::{ElgKeyPair, PublicParams, Role};
use crate::protocol::{unembed_data, Body, MsgType, ProtocolKind};

/// What the auditor knows: public parameters, plus A's ElGamal key pair when
/// forwarded ciphertexts must be opened.
#[derive(Debug, Clone)]
pub struct AuditKeys {
    pub public: PublicParams,
    pub a_elg: Option<ElgKeyPair>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuditFlags {
    pub fair: bool,
    pub sttp_involved: bool,
    /// Some field value the STTP received equals an offered `V_A`.
    pub sttp_saw_va: bool,
    pub a_acquired: bool,
    pub b_acquired: bool,
}

/// How the exchange unfolded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExchangeCase {
    /// No offer reached B.
    NoOffer,
    /// B stopped after the offer without answering or disputing.
    StoppedAtOffer,
    /// Basic protocol completed without the STTP.
    Clean,
    /// A received an unacceptable counter item.
    BadCounterItem,
    /// B disputed before any counter item reached A.
    DisputeWithoutCounterItem,
    /// B disputed after A had a valid counter item.
    DisputeAfterCounterItem,
    Other,
}

impl ExchangeCase {
    pub fn name(self) -> &'static str {
        match self {
            ExchangeCase::NoOffer => "no-offer",
            ExchangeCase::StoppedAtOffer => "stopped-at-offer",
            ExchangeCase::Clean => "clean",
            ExchangeCase::BadCounterItem => "bad-counter-item",
            ExchangeCase::DisputeWithoutCounterItem => "dispute-without-counter-item",
            ExchangeCase::DisputeAfterCounterItem => "dispute-after-counter-item",
            ExchangeCase::Other => "other",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    pub flags: AuditFlags,
    pub case: ExchangeCase,
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let yn = |b: bool| if b { "yes" } else { "no" };
        let fl = &self.flags;
        writeln!(f, "case:          {}", self.case.name())?;
        writeln!(f, "A acquired:    {}", yn(fl.a_acquired))?;
        writeln!(f, "B acquired:    {}", yn(fl.b_acquired))?;
        writeln!(f, "STTP involved: {}", yn(fl.sttp_involved))?;
        writeln!(f, "STTP saw V_A:  {}", yn(fl.sttp_saw_va))?;
        write!(f, "fair:          {}", yn(fl.fair))
    }
}

pub fn audit(t: &Transcript, keys: &AuditKeys) -> Result<AuditReport> {
    let h = &t.header;
    let public = &keys.public;
    for r in t.records() {
        if r.msg.session_id != h.session_id {
            return Err(Error::Audit(format!(
                "record at tick {} belongs to session {}",
                r.tick,
                hex::encode(r.msg.session_id)
            )));
        }
        if r.sender == r.receiver {
            return Err(Error::Audit(format!("record at tick {} sent to itself", r.tick)));
        }
    }
    let a_ctx = CembsContext::a_side(public);
    let to = |role: Role| t.records().filter(move |r| r.receiver == role);

    let counter_ok = |r: &Record| match (h.protocol, r.msg.body()) {
        (ProtocolKind::DataForSignature, Ok(Body::DataPayload { data })) => h.a_expect.accepts_data(&data),
        (ProtocolKind::CommonMessage | ProtocolKind::LinkedFiles, Ok(Body::CounterSignature { s })) => {
            h.a_expect.accepts_signature(&s, &public.b_rsa)
        }
        _ => false,
    };
    let counter_from_b: Vec<&Record> = to(Role::A)
        .filter(|r| r.sender == Role::B && matches!(r.msg.msg_type, MsgType::CounterSignature | MsgType::DataPayload))
        .collect();
    let counter_valid = counter_from_b.iter().any(|r| counter_ok(r));

    let mut a_acquired = counter_valid;
    for r in to(Role::A).filter(|r| r.sender == Role::Sttp && r.msg.msg_type == MsgType::ForwardCiphertext) {
        let Ok(Body::ForwardCiphertext { w, v }) = r.msg.body() else {
            continue;
        };
        let key = keys
            .a_elg
            .as_ref()
            .ok_or_else(|| Error::Audit("a forwarded ciphertext needs A's ElGamal secret to check".into()))?;
        let Ok(x) = elgamal::elg_decrypt(&ElgCiphertext { w, v, under: Role::A }, key) else {
            continue;
        };
        let ok = match h.protocol {
            ProtocolKind::DataForSignature => unembed_data(&x).is_some_and(|d| h.a_expect.accepts_data(&d)),
            _ => h.a_expect.accepts_signature(&x, &public.b_rsa),
        };
        a_acquired |= ok;
    }

    let first_offer = to(Role::B).find(|r| r.sender == Role::A && r.msg.msg_type == MsgType::CembsOffer);
    let accepted_va: Option<BigUint> = first_offer.and_then(|r| match r.msg.body() {
        Ok(Body::CembsOffer { w, v, c, r }) => {
            let commitment = cembs::blind_commit(&v, &public.commit_base);
            let v_ok = !v.is_zero() && v < public.a_elg.modulus;
            (v_ok && cembs::cembs_verify(&w, &commitment, &CembsCertificate { r, c }, &a_ctx)).then_some(v)
        }
        _ => None,
    });
    let mut b_acquired = false;
    let mut offer_seen = false;
    for r in to(Role::B) {
        match (r.sender, r.msg.body()) {
            (Role::A, Ok(Body::CembsOffer { .. })) => offer_seen = true,
            (Role::A, Ok(Body::FinalSignature { s })) if offer_seen => {
                b_acquired |= h.b_expect.accepts_signature(&s, &public.a_rsa);
            }
            (Role::Sttp, Ok(Body::BlindHalfReply { half })) => {
                if let Some(va) = &accepted_va {
                    b_acquired |= elgamal::unblind(va, &BlindHalf { value: half }, &public.sttp_elg.modulus)
                        .is_ok_and(|s| h.b_expect.accepts_signature(&s, &public.a_rsa));
                }
            }
            _ => {}
        }
    }

    let sttp_involved = t.records().any(|r| r.sender == Role::Sttp || r.receiver == Role::Sttp);
    let offered_va: Vec<BigUint> = t
        .records()
        .filter(|r| r.msg.msg_type == MsgType::CembsOffer)
        .filter_map(|r| r.msg.fields.get(1).map(|f| arith::decode(f)))
        .collect();
    let sttp_saw_va = to(Role::Sttp)
        .flat_map(|r| r.msg.fields.iter())
        .any(|f| offered_va.contains(&arith::decode(f)));

    let disputed = t.records().any(|r| r.msg.msg_type == MsgType::RecoveryRequest);
    let case = if first_offer.is_none() {
        ExchangeCase::NoOffer
    } else if !counter_from_b.is_empty() && !counter_valid {
        ExchangeCase::BadCounterItem
    } else if disputed && counter_from_b.is_empty() {
        ExchangeCase::DisputeWithoutCounterItem
    } else if disputed {
        ExchangeCase::DisputeAfterCounterItem
    } else if counter_from_b.is_empty() && !t.records().any(|r| r.sender == Role::B) {
        ExchangeCase::StoppedAtOffer
    } else if !sttp_involved && a_acquired && b_acquired {
        ExchangeCase::Clean
    } else {
        ExchangeCase::Other
    };

    Ok(AuditReport {
        flags: AuditFlags {
            fair: a_acquired == b_acquired,
            sttp_involved,
            sttp_saw_va,
            a_acquired,
            b_acquired,
        },
        case,
    })
}
