//! Session transcripts and their text format.
//!
//! ```text
//! # cembs transcript v1
//! # protocol common
//! # session <32 hex>
//! # expect A sig <hex rep>        (or: # expect A data <64 hex digest>)
//! # expect B sig <hex rep>
//! <tick>\t<sender>\t<receiver>\t<hex wire message>
//! # event <tick> <role> <free text>
//! # end <record count>
//! ```
//!
//! Records and events appear in the order they happened. The `# end` trailer
//! is mandatory so a truncated file is rejected rather than audited.

use std::fmt::Write as _;

use num_bigint::BigUint;

use crate::arith;
use crate::error::{Error, Result};
use crate::keys::Role;
use crate::protocol::{Expectation, ProtocolKind, SessionId, WireMessage};

const MAGIC: &str = "# cembs transcript v1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub tick: u64,
    pub sender: Role,
    pub receiver: Role,
    pub msg: WireMessage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub tick: u64,
    pub role: Role,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entry {
    Record(Record),
    Event(Event),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptHeader {
    pub protocol: ProtocolKind,
    pub session_id: SessionId,
    /// What A accepts from B.
    pub a_expect: Expectation,
    /// What B accepts from A.
    pub b_expect: Expectation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub entries: Vec<Entry>,
}

impl Transcript {
    pub fn new(header: TranscriptHeader) -> Self {
        Transcript {
            header,
            entries: Vec::new(),
        }
    }

    pub fn push_record(&mut self, tick: u64, sender: Role, receiver: Role, msg: WireMessage) {
        self.entries.push(Entry::Record(Record {
            tick,
            sender,
            receiver,
            msg,
        }));
    }

    pub fn push_event(&mut self, tick: u64, role: Role, text: impl Into<String>) {
        let text: String = text.into();
        self.entries.push(Entry::Event(Event {
            tick,
            role,
            text: text.replace('\n', " "),
        }));
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Record(r) => Some(r),
            Entry::Event(_) => None,
        })
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.entries.iter().filter_map(|e| match e {
            Entry::Event(ev) => Some(ev),
            Entry::Record(_) => None,
        })
    }

    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "# protocol {}", h.protocol);
        let _ = writeln!(out, "# session {}", hex::encode(h.session_id));
        let _ = writeln!(out, "# expect A {}", expectation_text(&h.a_expect));
        let _ = writeln!(out, "# expect B {}", expectation_text(&h.b_expect));
        let mut count = 0;
        for entry in &self.entries {
            match entry {
                Entry::Record(r) => {
                    count += 1;
                    let _ = writeln!(
                        out,
                        "{}\t{}\t{}\t{}",
                        r.tick,
                        r.sender,
                        r.receiver,
                        hex::encode(r.msg.encode())
                    );
                }
                Entry::Event(e) => {
                    let _ = writeln!(out, "# event {} {} {}", e.tick, e.role, e.text);
                }
            }
        }
        let _ = writeln!(out, "# end {count}");
        out
    }

    pub fn parse(text: &str) -> Result<Transcript> {
        let bad = |line: usize, why: String| Error::Transcript(format!("line {line}: {why}"));
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

        let mut header_line = |want: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, l)) => match l.strip_prefix(want) {
                    Some(rest) => Ok((i, rest.trim().to_string())),
                    None => Err(bad(i, format!("expected {want:?}"))),
                },
                None => Err(Error::Transcript(format!("truncated: missing {want:?}"))),
            }
        };
        let (i, rest) = header_line(MAGIC)?;
        if !rest.is_empty() {
            return Err(bad(i, "unexpected text after the version line".into()));
        }
        let (i, proto) = header_line("# protocol ")?;
        let protocol: ProtocolKind = proto.parse().map_err(|e: Error| bad(i, e.to_string()))?;
        let (i, sid) = header_line("# session ")?;
        let session_id: SessionId = hex::decode(&sid)
            .ok()
            .and_then(|b| b.try_into().ok())
            .ok_or_else(|| bad(i, "session id must be 16 hex bytes".into()))?;
        let (i, a) = header_line("# expect A ")?;
        let a_expect = parse_expectation(&a).map_err(|why| bad(i, why))?;
        let (i, b) = header_line("# expect B ")?;
        let b_expect = parse_expectation(&b).map_err(|why| bad(i, why))?;

        let mut t = Transcript::new(TranscriptHeader {
            protocol,
            session_id,
            a_expect,
            b_expect,
        });
        let mut count = 0usize;
        let mut ended = false;
        for (i, line) in lines {
            if ended {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(bad(i, "content after the end trailer".into()));
            }
            if line.trim().is_empty() {
                continue;
            }
            if let Some(n) = line.strip_prefix("# end ") {
                let n: usize = n.trim().parse().map_err(|_| bad(i, "bad record count".into()))?;
                if n != count {
                    return Err(bad(i, format!("trailer counts {n} records, file has {count}")));
                }
                ended = true;
            } else if let Some(ev) = line.strip_prefix("# event ") {
                let mut parts = ev.splitn(3, ' ');
                let tick = parts.next().and_then(|s| s.parse().ok());
                let role = parts.next().and_then(|s| s.parse::<Role>().ok());
                let (Some(tick), Some(role)) = (tick, role) else {
                    return Err(bad(i, "malformed event line".into()));
                };
                t.push_event(tick, role, parts.next().unwrap_or(""));
            } else if line.starts_with('#') {
                continue;
            } else {
                let cols: Vec<&str> = line.split('\t').collect();
                let [tick, sender, receiver, msg] = cols[..] else {
                    return Err(bad(i, format!("expected 4 tab-separated columns, got {}", cols.len())));
                };
                let tick: u64 = tick.parse().map_err(|_| bad(i, format!("bad tick {tick:?}")))?;
                let sender: Role = sender.parse().map_err(|e: Error| bad(i, e.to_string()))?;
                let receiver: Role = receiver.parse().map_err(|e: Error| bad(i, e.to_string()))?;
                let bytes = hex::decode(msg).map_err(|e| bad(i, format!("bad hex: {e}")))?;
                let msg = WireMessage::decode(&bytes).map_err(|e| bad(i, e.to_string()))?;
                t.push_record(tick, sender, receiver, msg);
                count += 1;
            }
        }
        if !ended {
            return Err(Error::Transcript("truncated: missing end trailer".into()));
        }
        Ok(t)
    }
}

fn expectation_text(e: &Expectation) -> String {
    match e {
        Expectation::Signature { rep } => format!("sig {}", hex::encode(arith::encode(rep))),
        Expectation::DataDigest(d) => format!("data {}", hex::encode(d)),
    }
}

fn parse_expectation(s: &str) -> std::result::Result<Expectation, String> {
    match s.split_once(' ') {
        Some(("sig", h)) => {
            let bytes = hex::decode(h).map_err(|e| format!("bad representative hex: {e}"))?;
            Ok(Expectation::Signature {
                rep: BigUint::from_bytes_be(&bytes),
            })
        }
        Some(("data", h)) => {
            let d: [u8; 32] = hex::decode(h)
                .ok()
                .and_then(|b| b.try_into().ok())
                .ok_or("data digest must be 32 hex bytes")?;
            Ok(Expectation::DataDigest(d))
        }
        _ => Err(format!("unknown expectation {s:?}")),
    }
}
