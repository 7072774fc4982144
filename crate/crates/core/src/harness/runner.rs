//! Tick-driven session scheduler.
//!
//! Every party gets [`Input::Start`] at tick 0. Each tick first delivers the
//! messages due, in `(deliver_at, send order)`, then fires expired deadlines
//! in role order. The clock then jumps to the next delivery or deadline. A
//! session ends when nothing is in flight and no deadline is pending, or when
//! the tick budget runs out (reported as stalled).

use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use super::audit::{AuditFlags, AuditReport};
use super::fault::FaultScript;
use super::transcript::{Transcript, TranscriptHeader};
use super::transport::Transport;
use crate::arith::{self, DetRng};
use crate::error::Result;
use crate::keys::Role;
use crate::protocol::{AParty, BParty, Input, Party, SessionConfig, SessionSetup, StepOutput, Verdict};

/// Ticks after which a session that has not gone quiet is declared stalled.
pub const TICK_BUDGET: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub setup: Arc<SessionSetup>,
    pub transcript: Transcript,
    pub a: AParty,
    pub b: BParty,
    pub sttp: crate::protocol::SttpParty,
    pub stalled: bool,
    pub final_tick: u64,
}

impl SessionOutcome {
    /// The audit flags as the parties' own states report them.
    pub fn live_flags(&self) -> AuditFlags {
        let a_acquired = self.a.acquired().is_some();
        let b_acquired = self.b.acquired().is_some();
        let va = self.a.offer().map(|o| o.ciphertext.v.clone());
        let sttp_saw_va = va.is_some_and(|va| self.sttp.received_fields().iter().any(|f| arith::decode(f) == va));
        AuditFlags {
            fair: a_acquired == b_acquired,
            sttp_involved: self.sttp_messages() > 0,
            sttp_saw_va,
            a_acquired,
            b_acquired,
        }
    }

    /// Delivered messages to or from the STTP.
    pub fn sttp_messages(&self) -> usize {
        self.transcript
            .records()
            .filter(|r| r.sender == Role::Sttp || r.receiver == Role::Sttp)
            .count()
    }

    pub fn verdicts(&self) -> (Verdict, Verdict) {
        (self.a.verdict(), self.b.verdict())
    }

    pub fn summary(&self, report: &AuditReport) -> String {
        format!(
            "A: {}  B: {}  ticks: {}{}\n{report}",
            self.a.verdict().name(),
            self.b.verdict().name(),
            self.final_tick,
            if self.stalled { "  (stalled)" } else { "" }
        )
    }
}

trait Executor {
    fn step(&mut self, role: Role, input: Input, now: u64) -> StepOutput;
    fn deadline(&self, role: Role) -> Option<u64>;
}

struct Inline {
    a: AParty,
    b: BParty,
    sttp: crate::protocol::SttpParty,
}

impl Inline {
    fn party(&mut self, role: Role) -> &mut dyn Party {
        match role {
            Role::A => &mut self.a,
            Role::B => &mut self.b,
            Role::Sttp => &mut self.sttp,
        }
    }
}

impl Executor for Inline {
    fn step(&mut self, role: Role, input: Input, now: u64) -> StepOutput {
        self.party(role).step(input, now)
    }

    fn deadline(&self, role: Role) -> Option<u64> {
        match role {
            Role::A => self.a.deadline(),
            Role::B => self.b.deadline(),
            Role::Sttp => self.sttp.deadline(),
        }
    }
}

type Reply = (StepOutput, Option<u64>);

/// Each party on its own thread, driven in lock step by the scheduler.
struct Threaded {
    inputs: Vec<(Role, mpsc::Sender<(Input, u64)>)>,
    replies: Vec<(Role, mpsc::Receiver<Reply>)>,
    deadlines: [Option<u64>; 3],
}

fn slot(role: Role) -> usize {
    match role {
        Role::A => 0,
        Role::B => 1,
        Role::Sttp => 2,
    }
}

impl Executor for Threaded {
    fn step(&mut self, role: Role, input: Input, now: u64) -> StepOutput {
        let tx = &self
            .inputs
            .iter()
            .find(|(r, _)| *r == role)
            .expect("every role has a thread")
            .1;
        tx.send((input, now)).expect("party thread alive");
        let rx = &self
            .replies
            .iter()
            .find(|(r, _)| *r == role)
            .expect("every role has a thread")
            .1;
        let (out, deadline) = rx.recv().expect("party thread alive");
        self.deadlines[slot(role)] = deadline;
        out
    }

    fn deadline(&self, role: Role) -> Option<u64> {
        self.deadlines[slot(role)]
    }
}

struct Scheduler {
    transport: Transport,
    transcript: Transcript,
}

impl Scheduler {
    fn emit(&mut self, from: Role, out: StepOutput, now: u64) {
        for text in out.events {
            self.transcript.push_event(now, from, text);
        }
        for (to, msg) in out.send {
            for note in self.transport.send(now, from, to, msg) {
                self.transcript.push_event(now, from, note);
            }
        }
    }

    /// Returns `(stalled, final tick)`.
    fn run(&mut self, ex: &mut dyn Executor) -> (bool, u64) {
        let mut now = 0;
        for role in Role::ALL {
            let out = ex.step(role, Input::Start, 0);
            self.emit(role, out, 0);
        }
        loop {
            while let Some(f) = self.transport.deliver(now) {
                self.transcript.push_record(now, f.from, f.to, f.msg.clone());
                let out = ex.step(
                    f.to,
                    Input::Deliver {
                        from: f.from,
                        msg: f.msg,
                    },
                    now,
                );
                self.emit(f.to, out, now);
            }
            for role in Role::ALL {
                if ex.deadline(role).is_some_and(|d| d <= now) {
                    let out = ex.step(role, Input::Timeout, now);
                    self.emit(role, out, now);
                }
            }
            let next_deadline = Role::ALL.iter().filter_map(|r| ex.deadline(*r)).min();
            let next = match (self.transport.next_delivery_tick(), next_deadline) {
                (None, None) => return (false, now),
                (a, b) => a.into_iter().chain(b).min().expect("one is set"),
            };
            let next = next.max(now + 1);
            if next > TICK_BUDGET {
                self.transcript
                    .push_event(now, Role::Sttp, "tick budget exhausted; session stalled");
                return (true, now);
            }
            now = next;
        }
    }
}

fn prepare(cfg: &SessionConfig, script: &FaultScript) -> Result<(Arc<SessionSetup>, Inline, Scheduler)> {
    let setup = Arc::new(SessionSetup::new(cfg)?);
    let rng = DetRng::from_seed(cfg.seed);
    let parties = Inline {
        a: AParty::new(Arc::clone(&setup), rng.derive("A")),
        b: BParty::new(Arc::clone(&setup), rng.derive("B")),
        sttp: crate::protocol::SttpParty::new(Arc::clone(&setup)),
    };
    let sched = Scheduler {
        transport: Transport::new(script),
        transcript: Transcript::new(TranscriptHeader {
            protocol: setup.kind,
            session_id: setup.session_id,
            a_expect: setup.a_expect.clone(),
            b_expect: setup.b_expect.clone(),
        }),
    };
    Ok((setup, parties, sched))
}

/// Runs one session to quiescence on the calling thread.
pub fn run_session(cfg: &SessionConfig, script: &FaultScript) -> Result<SessionOutcome> {
    let (setup, mut parties, mut sched) = prepare(cfg, script)?;
    let (stalled, final_tick) = sched.run(&mut parties);
    Ok(SessionOutcome {
        setup,
        transcript: sched.transcript,
        a: parties.a,
        b: parties.b,
        sttp: parties.sttp,
        stalled,
        final_tick,
    })
}

fn serve<P: Party>(mut party: P, rx: mpsc::Receiver<(Input, u64)>, tx: mpsc::Sender<Reply>) -> P {
    for (input, now) in rx {
        let out = party.step(input, now);
        if tx.send((out, party.deadline())).is_err() {
            break;
        }
    }
    party
}

/// Same as [`run_session`], with each party on its own thread. The
/// scheduler still serialises steps, so the transcript is identical.
pub fn run_session_threaded(cfg: &SessionConfig, script: &FaultScript) -> Result<SessionOutcome> {
    let (setup, parties, mut sched) = prepare(cfg, script)?;
    let Inline { a, b, sttp } = parties;
    let (a_in, a_rx) = mpsc::channel();
    let (b_in, b_rx) = mpsc::channel();
    let (t_in, t_rx) = mpsc::channel();
    let (a_tx, a_out) = mpsc::channel();
    let (b_tx, b_out) = mpsc::channel();
    let (t_tx, t_out) = mpsc::channel();
    thread::scope(|s| {
        let ha = s.spawn(move || serve(a, a_rx, a_tx));
        let hb = s.spawn(move || serve(b, b_rx, b_tx));
        let ht = s.spawn(move || serve(sttp, t_rx, t_tx));
        let mut ex = Threaded {
            inputs: vec![(Role::A, a_in), (Role::B, b_in), (Role::Sttp, t_in)],
            replies: vec![(Role::A, a_out), (Role::B, b_out), (Role::Sttp, t_out)],
            deadlines: [None; 3],
        };
        let (stalled, final_tick) = sched.run(&mut ex);
        drop(ex);
        let a = ha.join().expect("A thread panicked");
        let b = hb.join().expect("B thread panicked");
        let sttp = ht.join().expect("STTP thread panicked");
        Ok(SessionOutcome {
            setup,
            transcript: sched.transcript,
            a,
            b,
            sttp,
            stalled,
            final_tick,
        })
    })
}
