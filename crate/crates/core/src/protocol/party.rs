use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;

use super::session::{BItem, SessionSetup};
use super::wire::{Body, MsgType, RecoveryFields, WireMessage};
use super::{embed_data, unembed_data, Acquired, ProtocolKind, Verdict};
use crate::arith::DetRng;
use crate::cembs::{self, BlindCommitment, CembsCertificate, CembsOutput, Nonces};
use crate::elgamal::{self, BlindHalf, ElgCiphertext};
use crate::keys::Role;
use crate::rsa;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    /// Session start, delivered once to every party at tick 0.
    Start,
    Deliver {
        from: Role,
        msg: WireMessage,
    },
    /// The party's own deadline has passed.
    Timeout,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StepOutput {
    pub send: Vec<(Role, WireMessage)>,
    /// Protocol violations, rejections and other notes for the transcript.
    pub events: Vec<String>,
}

impl StepOutput {
    fn note(&mut self, text: impl Into<String>) {
        self.events.push(text.into());
    }
}

/// A single-owner protocol state machine.
pub trait Party: Send {
    fn role(&self) -> Role;
    fn step(&mut self, input: Input, now: u64) -> StepOutput;
    /// Absolute tick at which the party wants an [`Input::Timeout`].
    fn deadline(&self) -> Option<u64>;
    fn verdict(&self) -> Verdict;
    fn acquired(&self) -> Option<&Acquired>;
}

fn acquire(slot: &mut Option<Acquired>, verdict: &mut Verdict, item: Acquired, how: Verdict) -> bool {
    if slot.is_some() {
        return false;
    }
    *slot = Some(item);
    if *verdict != Verdict::Success {
        *verdict = how;
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum APhase {
    Init,
    AwaitCounter,
    Done,
}

/// Client A: opens with a certified encrypted signature, releases her plain
/// signature only after checking B's counter item.
#[derive(Debug, Clone)]
pub struct AParty {
    setup: Arc<SessionSetup>,
    rng: DetRng,
    phase: APhase,
    verdict: Verdict,
    acquired: Option<Acquired>,
    signature: Option<BigUint>,
    offer: Option<CembsOutput>,
    deadline: Option<u64>,
}

impl AParty {
    pub fn new(setup: Arc<SessionSetup>, rng: DetRng) -> Self {
        AParty {
            setup,
            rng,
            phase: APhase::Init,
            verdict: Verdict::Pending,
            acquired: None,
            signature: None,
            offer: None,
            deadline: None,
        }
    }

    pub fn signature(&self) -> Option<&BigUint> {
        self.signature.as_ref()
    }

    pub fn offer(&self) -> Option<&CembsOutput> {
        self.offer.as_ref()
    }

    fn finish(&mut self, verdict: Verdict) {
        self.phase = APhase::Done;
        self.deadline = None;
        if self.verdict == Verdict::Pending {
            self.verdict = verdict;
        }
    }

    fn start(&mut self, now: u64, out: &mut StepOutput) {
        let setup = Arc::clone(&self.setup);
        let built = rsa::rsa_sign(&setup.a_message, &setup.params.a_rsa, Role::A).and_then(|sig| {
            let nonces = Nonces::sample(&setup.a_ctx, &mut self.rng)?;
            let offer = cembs::cembs_generate(&sig.s, &setup.a_ctx, &nonces)?;
            Ok((sig, offer))
        });
        match built {
            Ok((sig, offer)) => {
                let body = Body::CembsOffer {
                    w: offer.ciphertext.w.clone(),
                    v: offer.ciphertext.v.clone(),
                    c: offer.certificate.c.clone(),
                    r: offer.certificate.r.clone(),
                };
                out.send
                    .push((Role::B, WireMessage::from_body(setup.session_id, &body)));
                self.signature = Some(sig.s);
                self.offer = Some(offer);
                self.phase = APhase::AwaitCounter;
                self.deadline = Some(now + setup.timeout);
            }
            Err(e) => {
                out.note(format!("could not build offer: {e}"));
                self.finish(Verdict::Aborted);
            }
        }
    }

    /// Checks a counter item from B; `None` when the body does not parse.
    fn check_counter(&self, msg: &WireMessage) -> Option<(Acquired, bool)> {
        let setup = &self.setup;
        match (setup.kind, msg.body().ok()?) {
            (ProtocolKind::DataForSignature, Body::DataPayload { data }) => {
                let ok = setup.a_expect.accepts_data(&data);
                Some((Acquired::Data(data), ok))
            }
            (ProtocolKind::CommonMessage | ProtocolKind::LinkedFiles, Body::CounterSignature { s }) => {
                let ok = setup.a_expect.accepts_signature(&s, &setup.public.b_rsa);
                Some((Acquired::Signature(s), ok))
            }
            _ => None,
        }
    }

    fn on_counter(&mut self, msg: &WireMessage, out: &mut StepOutput) {
        let checked = self.check_counter(msg);
        if self.phase != APhase::AwaitCounter {
            match checked {
                Some((item, true)) if self.acquired.is_none() => {
                    self.acquired = Some(item);
                    out.note(format!("late {} accepted; nothing released", msg.msg_type));
                }
                _ => out.note(format!("violation: out-of-phase {}", msg.msg_type)),
            }
            return;
        }
        match checked {
            Some((item, true)) => {
                acquire(&mut self.acquired, &mut self.verdict, item, Verdict::Success);
                let s = self.signature.clone().expect("offer sent before awaiting counter");
                out.send.push((
                    Role::B,
                    WireMessage::from_body(self.setup.session_id, &Body::FinalSignature { s }),
                ));
                self.finish(Verdict::Success);
            }
            _ => {
                out.note(format!("{} failed verification; signature withheld", msg.msg_type));
                self.finish(Verdict::Aborted);
            }
        }
    }

    fn on_forward(&mut self, msg: &WireMessage, out: &mut StepOutput) {
        let Ok(Body::ForwardCiphertext { w, v }) = msg.body() else {
            out.note("malformed ForwardCiphertext ignored");
            return;
        };
        let setup = &self.setup;
        let ct = ElgCiphertext { w, v, under: Role::A };
        let item = match elgamal::elg_decrypt(&ct, &setup.params.a_elg) {
            Ok(x) => x,
            Err(e) => {
                out.note(format!("forwarded ciphertext did not decrypt: {e}"));
                return;
            }
        };
        let checked = match setup.kind {
            ProtocolKind::DataForSignature => unembed_data(&item)
                .filter(|d| setup.a_expect.accepts_data(d))
                .map(Acquired::Data),
            _ => Some(item)
                .filter(|s| setup.a_expect.accepts_signature(s, &setup.public.b_rsa))
                .map(Acquired::Signature),
        };
        match checked {
            Some(item) => {
                if acquire(&mut self.acquired, &mut self.verdict, item, Verdict::Recovered) {
                    out.note("counterpart item recovered from forwarded ciphertext");
                }
                if self.phase == APhase::AwaitCounter {
                    self.finish(Verdict::Recovered);
                }
            }
            None => out.note("forwarded ciphertext holds no acceptable item"),
        }
    }
}

impl Party for AParty {
    fn role(&self) -> Role {
        Role::A
    }

    fn step(&mut self, input: Input, now: u64) -> StepOutput {
        let mut out = StepOutput::default();
        match input {
            Input::Start if self.phase == APhase::Init => self.start(now, &mut out),
            Input::Start => out.note("violation: repeated start"),
            Input::Timeout => {
                if self.phase == APhase::AwaitCounter {
                    out.note("no counter item before timeout; giving up");
                    self.finish(Verdict::Aborted);
                }
                self.deadline = None;
            }
            Input::Deliver { from, msg } => match (from, msg.msg_type) {
                (Role::B, MsgType::CounterSignature | MsgType::DataPayload) => self.on_counter(&msg, &mut out),
                (Role::Sttp, MsgType::ForwardCiphertext) => self.on_forward(&msg, &mut out),
                (from, t) => out.note(format!("violation: unexpected {t} from {from}")),
            },
        }
        out
    }

    fn deadline(&self) -> Option<u64> {
        self.deadline
    }

    fn verdict(&self) -> Verdict {
        self.verdict
    }

    fn acquired(&self) -> Option<&Acquired> {
        self.acquired.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BPhase {
    AwaitOffer,
    AwaitFinal,
    AwaitRecovery,
    Done,
}

/// A's offer as B received it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedOffer {
    pub w: BigUint,
    pub v: BigUint,
    pub certificate: CembsCertificate,
    pub commitment: BlindCommitment,
}

/// Client B: answers a verified offer with his item and disputes through the
/// STTP when A's signature does not arrive or does not verify.
#[derive(Debug, Clone)]
pub struct BParty {
    setup: Arc<SessionSetup>,
    rng: DetRng,
    phase: BPhase,
    verdict: Verdict,
    acquired: Option<Acquired>,
    offer: Option<ReceivedOffer>,
    own_signature: Option<BigUint>,
    request: Option<WireMessage>,
    deadline: Option<u64>,
}

impl BParty {
    pub fn new(setup: Arc<SessionSetup>, rng: DetRng) -> Self {
        BParty {
            setup,
            rng,
            phase: BPhase::AwaitOffer,
            verdict: Verdict::Pending,
            acquired: None,
            offer: None,
            own_signature: None,
            request: None,
            deadline: None,
        }
    }

    pub fn offer(&self) -> Option<&ReceivedOffer> {
        self.offer.as_ref()
    }

    pub fn own_signature(&self) -> Option<&BigUint> {
        self.own_signature.as_ref()
    }

    pub fn recovery_request(&self) -> Option<&WireMessage> {
        self.request.as_ref()
    }

    fn finish(&mut self, verdict: Verdict) {
        self.phase = BPhase::Done;
        self.deadline = None;
        if self.verdict == Verdict::Pending {
            self.verdict = verdict;
        }
    }

    fn accepts_from_a(&self, s: &BigUint) -> bool {
        self.setup.b_expect.accepts_signature(s, &self.setup.public.a_rsa)
    }

    fn on_offer(&mut self, msg: &WireMessage, now: u64, out: &mut StepOutput) {
        if self.phase != BPhase::AwaitOffer {
            out.note("violation: out-of-phase CembsOffer");
            return;
        }
        let setup = Arc::clone(&self.setup);
        let Ok(Body::CembsOffer { w, v, c, r }) = msg.body() else {
            out.note("malformed offer; protocol stopped");
            self.finish(Verdict::Aborted);
            return;
        };
        let commitment = cembs::blind_commit(&v, &setup.public.commit_base);
        let certificate = CembsCertificate { r, c };
        let v_ok = !v.is_zero() && v < setup.a_ctx.group.modulus;
        if !v_ok || !cembs::cembs_verify(&w, &commitment, &certificate, &setup.a_ctx) {
            out.note("offer certificate rejected; protocol stopped");
            self.finish(Verdict::Aborted);
            return;
        }
        let body = match &setup.b_item {
            BItem::Sign(m) => match rsa::rsa_sign(m, &setup.params.b_rsa, Role::B) {
                Ok(sig) => {
                    self.own_signature = Some(sig.s.clone());
                    Body::CounterSignature { s: sig.s }
                }
                Err(e) => {
                    out.note(format!("could not sign: {e}"));
                    self.finish(Verdict::Aborted);
                    return;
                }
            },
            BItem::Release(data) => Body::DataPayload { data: data.clone() },
        };
        self.offer = Some(ReceivedOffer {
            w,
            v,
            certificate,
            commitment,
        });
        out.send
            .push((Role::A, WireMessage::from_body(setup.session_id, &body)));
        self.phase = BPhase::AwaitFinal;
        self.deadline = Some(now + setup.timeout);
    }

    fn build_request(&mut self) -> Result<WireMessage, crate::Error> {
        if let Some(req) = &self.request {
            return Ok(req.clone());
        }
        let setup = Arc::clone(&self.setup);
        let offer = self.offer.as_ref().expect("recovery only after an accepted offer");
        let plaintext = match &setup.b_item {
            BItem::Sign(_) => self.own_signature.clone().expect("signed when the offer was accepted"),
            BItem::Release(data) => embed_data(data),
        };
        let nonces = Nonces::sample(&setup.b_ctx, &mut self.rng)?;
        let mine = cembs::cembs_generate(&plaintext, &setup.b_ctx, &nonces)?;
        let body = Body::RecoveryRequest(Box::new(RecoveryFields {
            a_w: offer.w.clone(),
            commitment: offer.commitment.value.clone(),
            a_c: offer.certificate.c.clone(),
            a_r: offer.certificate.r.clone(),
            b_w: mine.ciphertext.w,
            b_v: mine.ciphertext.v,
            b_c: mine.certificate.c,
            b_r: mine.certificate.r,
        }));
        let req = WireMessage::from_body(setup.session_id, &body);
        self.request = Some(req.clone());
        Ok(req)
    }

    fn start_recovery(&mut self, now: u64, out: &mut StepOutput) {
        match self.build_request() {
            Ok(req) => {
                out.send.push((Role::Sttp, req));
                self.phase = BPhase::AwaitRecovery;
                self.deadline = Some(now + self.setup.timeout);
            }
            Err(e) => {
                out.note(format!("could not build recovery request: {e}"));
                self.finish(Verdict::Aborted);
            }
        }
    }

    fn on_final(&mut self, msg: &WireMessage, now: u64, out: &mut StepOutput) {
        let s = match msg.body() {
            Ok(Body::FinalSignature { s }) => Some(s),
            _ => None,
        };
        let valid = s.as_ref().is_some_and(|s| self.accepts_from_a(s));
        match (self.phase, valid) {
            (BPhase::AwaitFinal | BPhase::AwaitRecovery, true) => {
                acquire(
                    &mut self.acquired,
                    &mut self.verdict,
                    Acquired::Signature(s.expect("valid implies parsed")),
                    Verdict::Success,
                );
                self.finish(Verdict::Success);
            }
            (BPhase::AwaitFinal, false) => {
                out.note("A's signature invalid; disputing");
                self.start_recovery(now, out);
            }
            (BPhase::Done, true) if self.acquired.is_none() => {
                acquire(
                    &mut self.acquired,
                    &mut self.verdict,
                    Acquired::Signature(s.expect("valid implies parsed")),
                    Verdict::Success,
                );
                out.note("late FinalSignature accepted");
            }
            _ => out.note("violation: out-of-phase or invalid FinalSignature ignored"),
        }
    }

    fn on_half(&mut self, msg: &WireMessage, out: &mut StepOutput) {
        let (Some(offer), Ok(Body::BlindHalfReply { half })) = (self.offer.as_ref(), msg.body()) else {
            out.note("violation: unusable BlindHalfReply");
            return;
        };
        let recovered = elgamal::unblind(&offer.v, &BlindHalf { value: half }, &self.setup.a_ctx.group.modulus)
            .ok()
            .filter(|s| self.accepts_from_a(s));
        match (recovered, self.phase) {
            (Some(s), _) => {
                if acquire(
                    &mut self.acquired,
                    &mut self.verdict,
                    Acquired::Signature(s),
                    Verdict::Recovered,
                ) {
                    out.note("A's signature recovered through the STTP");
                }
                if self.phase == BPhase::AwaitRecovery {
                    self.finish(Verdict::Recovered);
                }
            }
            (None, BPhase::AwaitRecovery) => {
                out.note("blind decryption did not yield a valid signature");
                self.finish(Verdict::Aborted);
            }
            (None, _) => out.note("violation: out-of-phase BlindHalfReply"),
        }
    }
}

impl Party for BParty {
    fn role(&self) -> Role {
        Role::B
    }

    fn step(&mut self, input: Input, now: u64) -> StepOutput {
        let mut out = StepOutput::default();
        match input {
            Input::Start => {
                if self.phase == BPhase::AwaitOffer && self.deadline.is_none() {
                    self.deadline = Some(now + self.setup.timeout);
                }
            }
            Input::Timeout => match self.phase {
                BPhase::AwaitOffer => {
                    out.note("no offer before timeout");
                    self.finish(Verdict::Aborted);
                }
                BPhase::AwaitFinal => {
                    out.note("no signature from A before timeout; disputing");
                    self.start_recovery(now, &mut out);
                }
                BPhase::AwaitRecovery => {
                    out.note("STTP did not answer before timeout");
                    self.finish(Verdict::Aborted);
                }
                BPhase::Done => self.deadline = None,
            },
            Input::Deliver { from, msg } => match (from, msg.msg_type) {
                (Role::A, MsgType::CembsOffer) => self.on_offer(&msg, now, &mut out),
                (Role::A, MsgType::FinalSignature) => self.on_final(&msg, now, &mut out),
                (Role::Sttp, MsgType::BlindHalfReply) => self.on_half(&msg, &mut out),
                (from, t) => out.note(format!("violation: unexpected {t} from {from}")),
            },
        }
        out
    }

    fn deadline(&self) -> Option<u64> {
        self.deadline
    }

    fn verdict(&self) -> Verdict {
        self.verdict
    }

    fn acquired(&self) -> Option<&Acquired> {
        self.acquired.as_ref()
    }
}

/// The offline STTP. Stateless apart from bookkeeping: the same request
/// always produces the same replies.
#[derive(Debug, Clone)]
pub struct SttpParty {
    setup: Arc<SessionSetup>,
    received_fields: Vec<Vec<u8>>,
    granted: usize,
    rejected: usize,
}

impl SttpParty {
    pub fn new(setup: Arc<SessionSetup>) -> Self {
        SttpParty {
            setup,
            received_fields: Vec::new(),
            granted: 0,
            rejected: 0,
        }
    }

    /// Every field value the STTP has received, in arrival order.
    pub fn received_fields(&self) -> &[Vec<u8>] {
        &self.received_fields
    }

    pub fn granted(&self) -> usize {
        self.granted
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    /// Checks both certificates of a request; `Err` carries the reason.
    pub fn check_request(&self, req: &RecoveryFields) -> Result<(), &'static str> {
        let setup = &self.setup;
        let a_ok = cembs::cembs_verify(
            &req.a_w,
            &BlindCommitment {
                value: req.commitment.clone(),
            },
            &CembsCertificate {
                r: req.a_r.clone(),
                c: req.a_c.clone(),
            },
            &setup.a_ctx,
        );
        if !a_ok {
            return Err("A's certificate does not verify");
        }
        let b_v_ok = !req.b_v.is_zero() && req.b_v < setup.b_ctx.group.modulus;
        let b_ok = b_v_ok
            && cembs::cembs_verify(
                &req.b_w,
                &cembs::blind_commit(&req.b_v, &setup.public.commit_base),
                &CembsCertificate {
                    r: req.b_r.clone(),
                    c: req.b_c.clone(),
                },
                &setup.b_ctx,
            );
        if !b_ok {
            return Err("B's certificate does not verify");
        }
        Ok(())
    }

    fn on_request(&mut self, msg: &WireMessage, out: &mut StepOutput) {
        let req = match msg.body() {
            Ok(Body::RecoveryRequest(req)) => req,
            Ok(_) => unreachable!("dispatched on message type"),
            Err(e) => {
                self.rejected += 1;
                out.note(format!("recovery rejected: {e}"));
                return;
            }
        };
        if let Err(reason) = self.check_request(&req) {
            self.rejected += 1;
            out.note(format!("recovery rejected: {reason}"));
            return;
        }
        let half = match elgamal::blind_half(&req.a_w, &self.setup.params.sttp_elg) {
            Ok(h) => h,
            Err(e) => {
                self.rejected += 1;
                out.note(format!("recovery rejected: {e}"));
                return;
            }
        };
        let sid = self.setup.session_id;
        out.send.push((
            Role::B,
            WireMessage::from_body(sid, &Body::BlindHalfReply { half: half.value }),
        ));
        out.send.push((
            Role::A,
            WireMessage::from_body(
                sid,
                &Body::ForwardCiphertext {
                    w: req.b_w.clone(),
                    v: req.b_v.clone(),
                },
            ),
        ));
        self.granted += 1;
        out.note("recovery granted");
    }
}

impl Party for SttpParty {
    fn role(&self) -> Role {
        Role::Sttp
    }

    fn step(&mut self, input: Input, _now: u64) -> StepOutput {
        let mut out = StepOutput::default();
        if let Input::Deliver { from, msg } = input {
            self.received_fields.extend(msg.fields.iter().cloned());
            match (from, msg.msg_type) {
                (Role::B, MsgType::RecoveryRequest) => self.on_request(&msg, &mut out),
                (from, t) => {
                    self.rejected += 1;
                    out.note(format!("rejected {t} from {from}: only B may dispute"));
                }
            }
        }
        out
    }

    fn deadline(&self) -> Option<u64> {
        None
    }

    fn verdict(&self) -> Verdict {
        Verdict::Pending
    }

    fn acquired(&self) -> Option<&Acquired> {
        None
    }
}
