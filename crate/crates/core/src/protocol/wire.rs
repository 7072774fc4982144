//! Wire messages.
//!
//! Binary layout: `msg_type (1) || session_id (16) || field_count (1) ||
//! (len_be32 || bytes)*`. Integers inside fields use the minimal big-endian
//! encoding, except challenges which are always 32 bytes.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::arith;
use crate::cembs;
use crate::error::{Error, Result};

pub type SessionId = [u8; 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MsgType {
    CembsOffer,
    CounterSignature,
    FinalSignature,
    DataPayload,
    RecoveryRequest,
    BlindHalfReply,
    ForwardCiphertext,
}

impl MsgType {
    pub const ALL: [MsgType; 7] = [
        MsgType::CembsOffer,
        MsgType::CounterSignature,
        MsgType::FinalSignature,
        MsgType::DataPayload,
        MsgType::RecoveryRequest,
        MsgType::BlindHalfReply,
        MsgType::ForwardCiphertext,
    ];

    pub fn code(self) -> u8 {
        match self {
            MsgType::CembsOffer => 1,
            MsgType::CounterSignature => 2,
            MsgType::FinalSignature => 3,
            MsgType::DataPayload => 4,
            MsgType::RecoveryRequest => 5,
            MsgType::BlindHalfReply => 6,
            MsgType::ForwardCiphertext => 7,
        }
    }

    pub fn from_code(code: u8) -> Result<MsgType> {
        MsgType::ALL
            .into_iter()
            .find(|t| t.code() == code)
            .ok_or_else(|| Error::Decode(format!("unknown message type {code}")))
    }

    pub fn arity(self) -> usize {
        match self {
            MsgType::CembsOffer => 4,
            MsgType::RecoveryRequest => 8,
            MsgType::ForwardCiphertext => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MsgType::CembsOffer => "CembsOffer",
            MsgType::CounterSignature => "CounterSignature",
            MsgType::FinalSignature => "FinalSignature",
            MsgType::DataPayload => "DataPayload",
            MsgType::RecoveryRequest => "RecoveryRequest",
            MsgType::BlindHalfReply => "BlindHalfReply",
            MsgType::ForwardCiphertext => "ForwardCiphertext",
        }
    }
}

impl fmt::Display for MsgType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MsgType {
    type Err = Error;

    fn from_str(s: &str) -> Result<MsgType> {
        MsgType::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown message type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub session_id: SessionId,
    pub fields: Vec<Vec<u8>>,
}

impl WireMessage {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(18 + self.fields.iter().map(|f| 4 + f.len()).sum::<usize>());
        out.push(self.msg_type.code());
        out.extend_from_slice(&self.session_id);
        out.push(u8::try_from(self.fields.len()).expect("field count fits a byte"));
        for f in &self.fields {
            out.extend_from_slice(&(f.len() as u32).to_be_bytes());
            out.extend_from_slice(f);
        }
        out
    }

    /// Structural decode. Arity is checked when the body is interpreted, so
    /// a receiver can still log and reject a short message.
    pub fn decode(bytes: &[u8]) -> Result<WireMessage> {
        let short = || Error::Decode("truncated wire message".into());
        if bytes.len() < 18 {
            return Err(short());
        }
        let msg_type = MsgType::from_code(bytes[0])?;
        let session_id: SessionId = bytes[1..17].try_into().expect("16-byte slice");
        let count = bytes[17] as usize;
        let mut rest = &bytes[18..];
        let mut fields = Vec::with_capacity(count);
        for _ in 0..count {
            if rest.len() < 4 {
                return Err(short());
            }
            let len = u32::from_be_bytes(rest[..4].try_into().expect("4-byte slice")) as usize;
            rest = &rest[4..];
            if rest.len() < len {
                return Err(short());
            }
            fields.push(rest[..len].to_vec());
            rest = &rest[len..];
        }
        if !rest.is_empty() {
            return Err(Error::Decode("trailing bytes after last field".into()));
        }
        Ok(WireMessage {
            msg_type,
            session_id,
            fields,
        })
    }

    pub fn from_body(session_id: SessionId, body: &Body) -> WireMessage {
        WireMessage {
            msg_type: body.msg_type(),
            session_id,
            fields: body.fields(),
        }
    }

    pub fn body(&self) -> Result<Body> {
        Body::parse(self.msg_type, &self.fields)
    }
}

/// Typed view of a message body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Body {
    CembsOffer {
        w: BigUint,
        v: BigUint,
        c: BigUint,
        r: BigUint,
    },
    CounterSignature {
        s: BigUint,
    },
    FinalSignature {
        s: BigUint,
    },
    DataPayload {
        data: Vec<u8>,
    },
    RecoveryRequest(Box<RecoveryFields>),
    BlindHalfReply {
        half: BigUint,
    },
    ForwardCiphertext {
        w: BigUint,
        v: BigUint,
    },
}

/// `W_A, C, c_A, r_A, W_B, V_B, c_B, r_B`, in wire order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryFields {
    pub a_w: BigUint,
    pub commitment: BigUint,
    pub a_c: BigUint,
    pub a_r: BigUint,
    pub b_w: BigUint,
    pub b_v: BigUint,
    pub b_c: BigUint,
    pub b_r: BigUint,
}

fn challenge_field(c: &BigUint) -> Vec<u8> {
    cembs::encode_challenge(c).expect("challenges are hash outputs")
}

impl Body {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Body::CembsOffer { .. } => MsgType::CembsOffer,
            Body::CounterSignature { .. } => MsgType::CounterSignature,
            Body::FinalSignature { .. } => MsgType::FinalSignature,
            Body::DataPayload { .. } => MsgType::DataPayload,
            Body::RecoveryRequest(_) => MsgType::RecoveryRequest,
            Body::BlindHalfReply { .. } => MsgType::BlindHalfReply,
            Body::ForwardCiphertext { .. } => MsgType::ForwardCiphertext,
        }
    }

    pub fn fields(&self) -> Vec<Vec<u8>> {
        let e = arith::encode;
        match self {
            Body::CembsOffer { w, v, c, r } => vec![e(w), e(v), challenge_field(c), e(r)],
            Body::CounterSignature { s } | Body::FinalSignature { s } => vec![e(s)],
            Body::DataPayload { data } => vec![data.clone()],
            Body::RecoveryRequest(f) => vec![
                e(&f.a_w),
                e(&f.commitment),
                challenge_field(&f.a_c),
                e(&f.a_r),
                e(&f.b_w),
                e(&f.b_v),
                challenge_field(&f.b_c),
                e(&f.b_r),
            ],
            Body::BlindHalfReply { half } => vec![e(half)],
            Body::ForwardCiphertext { w, v } => vec![e(w), e(v)],
        }
    }

    pub fn parse(msg_type: MsgType, fields: &[Vec<u8>]) -> Result<Body> {
        if fields.len() != msg_type.arity() {
            return Err(Error::Decode(format!(
                "{msg_type} carries {} fields, expected {}",
                fields.len(),
                msg_type.arity()
            )));
        }
        let int = |i: usize| arith::decode(&fields[i]);
        let chal = |i: usize| cembs::decode_challenge(&fields[i]);
        Ok(match msg_type {
            MsgType::CembsOffer => Body::CembsOffer {
                w: int(0),
                v: int(1),
                c: chal(2)?,
                r: int(3),
            },
            MsgType::CounterSignature => Body::CounterSignature { s: int(0) },
            MsgType::FinalSignature => Body::FinalSignature { s: int(0) },
            MsgType::DataPayload => Body::DataPayload {
                data: fields[0].clone(),
            },
            MsgType::RecoveryRequest => Body::RecoveryRequest(Box::new(RecoveryFields {
                a_w: int(0),
                commitment: int(1),
                a_c: chal(2)?,
                a_r: int(3),
                b_w: int(4),
                b_v: int(5),
                b_c: chal(6)?,
                b_r: int(7),
            })),
            MsgType::BlindHalfReply => Body::BlindHalfReply { half: int(0) },
            MsgType::ForwardCiphertext => Body::ForwardCiphertext { w: int(0), v: int(1) },
        })
    }
}
