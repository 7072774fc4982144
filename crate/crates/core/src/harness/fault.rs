//! Fault scripts.
//!
//! One directive per line, `TRIGGER ACTION [ARGS]`, where `TRIGGER` is a tick
//! number or a message type name and `ACTION` is one of
//!
//! ```text
//! drop
//! corrupt_field <index> <bitflip|zero|increment>
//! delay <ticks>
//! silence_party <A|B|STTP>
//! ```
//!
//! A message-type trigger fires on the first message of that type; a tick
//! trigger fires on the first message sent at or after that tick. Each
//! directive fires at most once. `#` starts a comment.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::keys::Role;
use crate::protocol::MsgType;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    Tick(u64),
    Msg(MsgType),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptMode {
    /// Flip the lowest bit of the last byte (an empty field becomes `01`).
    BitFlip,
    /// Overwrite every byte with zero, keeping the length.
    Zero,
    /// Add one to the big-endian value, keeping the length unless it overflows.
    Increment,
}

impl CorruptMode {
    fn name(self) -> &'static str {
        match self {
            CorruptMode::BitFlip => "bitflip",
            CorruptMode::Zero => "zero",
            CorruptMode::Increment => "increment",
        }
    }

    pub fn apply(self, field: &mut Vec<u8>) {
        match self {
            CorruptMode::BitFlip => match field.last_mut() {
                Some(b) => *b ^= 1,
                None => field.push(1),
            },
            CorruptMode::Zero => field.iter_mut().for_each(|b| *b = 0),
            CorruptMode::Increment => {
                for b in field.iter_mut().rev() {
                    let (v, carry) = b.overflowing_add(1);
                    *b = v;
                    if !carry {
                        return;
                    }
                }
                field.insert(0, 1);
            }
        }
    }
}

impl FromStr for CorruptMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bitflip" => Ok(CorruptMode::BitFlip),
            "zero" => Ok(CorruptMode::Zero),
            "increment" => Ok(CorruptMode::Increment),
            other => Err(Error::Parameter(format!("unknown corruption mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Drop,
    CorruptField {
        index: usize,
        mode: CorruptMode,
    },
    Delay(u64),
    /// From the trigger on, drop everything `role` sends to anyone but the
    /// STTP (or everything, when `role` is the STTP).
    SilenceParty(Role),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Directive {
    pub trigger: Trigger,
    pub action: Action,
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.trigger {
            Trigger::Tick(t) => write!(f, "{t} ")?,
            Trigger::Msg(m) => write!(f, "{m} ")?,
        }
        match self.action {
            Action::Drop => f.write_str("drop"),
            Action::CorruptField { index, mode } => write!(f, "corrupt_field {index} {}", mode.name()),
            Action::Delay(t) => write!(f, "delay {t}"),
            Action::SilenceParty(r) => write!(f, "silence_party {r}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultScript {
    pub directives: Vec<Directive>,
}

const MAX_ARITY: usize = 8;

impl FaultScript {
    pub fn none() -> Self {
        FaultScript::default()
    }

    pub fn parse(text: &str) -> Result<FaultScript> {
        let mut directives = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::FaultScript { line: i + 1, reason };
            let words: Vec<&str> = line.split_whitespace().collect();
            let trigger = match words[0].parse::<u64>() {
                Ok(t) => Trigger::Tick(t),
                Err(_) => Trigger::Msg(words[0].parse::<MsgType>().map_err(|e| err(e.to_string()))?),
            };
            let args = &words[1..];
            let action = match args {
                ["drop"] => Action::Drop,
                ["corrupt_field" | "corrupt", index, mode] => {
                    let index: usize = index.parse().map_err(|_| err(format!("bad field index {index:?}")))?;
                    let limit = match trigger {
                        Trigger::Msg(m) => m.arity(),
                        Trigger::Tick(_) => MAX_ARITY,
                    };
                    if index >= limit {
                        return Err(err(format!("field index {index} out of range (< {limit})")));
                    }
                    let mode = mode.parse().map_err(|e: Error| err(e.to_string()))?;
                    Action::CorruptField { index, mode }
                }
                ["delay", ticks] => Action::Delay(ticks.parse().map_err(|_| err(format!("bad delay {ticks:?}")))?),
                ["silence_party" | "silence", role] => {
                    Action::SilenceParty(role.parse().map_err(|e: Error| err(e.to_string()))?)
                }
                _ => return Err(err(format!("unrecognised directive {line:?}"))),
            };
            directives.push(Directive { trigger, action });
        }
        Ok(FaultScript { directives })
    }

    pub fn to_text(&self) -> String {
        self.directives.iter().map(|d| format!("{d}\n")).collect()
    }
}

/// The scripts shipped with the harness, by name.
pub const SHIPPED: &[(&str, &str)] = &[
    ("none", include_str!("../../faults/none.txt")),
    ("b-bad-countersig", include_str!("../../faults/b-bad-countersig.txt")),
    ("b-early-dispute", include_str!("../../faults/b-early-dispute.txt")),
    ("a-silent-step3", include_str!("../../faults/a-silent-step3.txt")),
    ("a-garbage-s", include_str!("../../faults/a-garbage-s.txt")),
    ("drop-final", include_str!("../../faults/drop-final.txt")),
    ("drop-countersig", include_str!("../../faults/drop-countersig.txt")),
    ("a-garbage-data", include_str!("../../faults/a-garbage-data.txt")),
];

/// The signature-exchange fault matrix.
pub const SIGNATURE_MATRIX: [&str; 7] = [
    "none",
    "b-bad-countersig",
    "b-early-dispute",
    "a-silent-step3",
    "a-garbage-s",
    "drop-final",
    "drop-countersig",
];

pub fn shipped(name: &str) -> Option<FaultScript> {
    let name = name.strip_suffix(".txt").unwrap_or(name);
    SHIPPED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| FaultScript::parse(text).expect("shipped scripts parse"))
}
