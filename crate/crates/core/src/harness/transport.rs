use super::fault::{Action, Directive, FaultScript, Trigger};
use crate::keys::Role;
use crate::protocol::WireMessage;

/// Ticks between a send and its delivery.
pub const LATENCY: u64 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InFlight {
    pub deliver_at: u64,
    pub seq: u64,
    pub from: Role,
    pub to: Role,
    pub msg: WireMessage,
}

/// In-process message queue with fault injection applied at send time.
///
/// Delivery order is `(deliver_at, send order)`, which is FIFO per
/// sender-receiver pair unless a `delay` directive holds a message back.
#[derive(Debug, Clone)]
pub struct Transport {
    queue: Vec<InFlight>,
    next_seq: u64,
    directives: Vec<(Directive, bool)>,
    silenced: Vec<Role>,
}

impl Transport {
    pub fn new(script: &FaultScript) -> Self {
        Transport {
            queue: Vec::new(),
            next_seq: 0,
            directives: script.directives.iter().map(|d| (*d, false)).collect(),
            silenced: Vec::new(),
        }
    }

    fn is_silenced(&self, from: Role, to: Role) -> bool {
        self.silenced.contains(&from) && (to != Role::Sttp || from == Role::Sttp)
    }

    /// Queues `msg` after applying any directives it triggers. Returns a note
    /// per applied fault.
    pub fn send(&mut self, now: u64, from: Role, to: Role, mut msg: WireMessage) -> Vec<String> {
        let mut notes = Vec::new();
        let mut delay = 0;
        let mut dropped = false;
        for (directive, fired) in self.directives.iter_mut() {
            if *fired {
                continue;
            }
            let hit = match directive.trigger {
                Trigger::Msg(t) => t == msg.msg_type,
                Trigger::Tick(t) => now >= t,
            };
            if !hit {
                continue;
            }
            *fired = true;
            notes.push(format!("fault: {directive} on {} {from}->{to}", msg.msg_type));
            match directive.action {
                Action::Drop => dropped = true,
                Action::CorruptField { index, mode } => match msg.fields.get_mut(index) {
                    Some(field) => mode.apply(field),
                    None => notes.push(format!("fault: field {index} absent, message left intact")),
                },
                Action::Delay(t) => delay += t,
                Action::SilenceParty(role) => {
                    if !self.silenced.contains(&role) {
                        self.silenced.push(role);
                    }
                }
            }
        }
        if dropped {
            return notes;
        }
        if self.is_silenced(from, to) {
            notes.push(format!("fault: {from} silenced, {} to {to} dropped", msg.msg_type));
            return notes;
        }
        self.queue.push(InFlight {
            deliver_at: now + LATENCY + delay,
            seq: self.next_seq,
            from,
            to,
            msg,
        });
        self.next_seq += 1;
        notes
    }

    /// Removes and returns the next message due at or before `now`.
    pub fn deliver(&mut self, now: u64) -> Option<InFlight> {
        let idx = self
            .queue
            .iter()
            .enumerate()
            .filter(|(_, f)| f.deliver_at <= now)
            .min_by_key(|(_, f)| (f.deliver_at, f.seq))
            .map(|(i, _)| i)?;
        Some(self.queue.remove(idx))
    }

    pub fn next_delivery_tick(&self) -> Option<u64> {
        self.queue.iter().map(|f| f.deliver_at).min()
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }
}
