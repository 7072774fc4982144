use num_bigint::BigUint;
use num_traits::Zero;

use super::{embed_data, link_messages, Expectation, ProtocolKind, SessionId};
use crate::arith;
use crate::cembs::CembsContext;
use crate::error::{Error, Result};
use crate::keys::{self, PublicParams, SystemParams};
use crate::rsa::{self, Message, RepMode};

/// What a party believes is being exchanged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// One message both parties sign.
    Common { message: Vec<u8> },
    /// A signs `file_a` linked to `file_b`; B the reverse.
    Linked { file_a: Vec<u8>, file_b: Vec<u8> },
    /// B releases `data` for A's signature on its hash.
    Data { data: Vec<u8> },
}

impl Payload {
    pub fn kind(&self) -> ProtocolKind {
        match self {
            Payload::Common { .. } => ProtocolKind::CommonMessage,
            Payload::Linked { .. } => ProtocolKind::LinkedFiles,
            Payload::Data { .. } => ProtocolKind::DataForSignature,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub params: SystemParams,
    /// A's view of the payload.
    pub a_payload: Payload,
    /// B's view; equal to A's unless a test models disagreement.
    pub b_payload: Payload,
    /// Representative mode for `Common` messages. Other variants always hash.
    pub rep_mode: RepMode,
    /// Ticks a party waits before giving up or disputing.
    pub timeout: u64,
    pub seed: [u8; 32],
}

pub const DEFAULT_TIMEOUT: u64 = 8;

impl SessionConfig {
    pub fn new(params: SystemParams, payload: Payload, seed: [u8; 32]) -> Self {
        SessionConfig {
            params,
            b_payload: payload.clone(),
            a_payload: payload,
            rep_mode: RepMode::Hashed,
            timeout: DEFAULT_TIMEOUT,
            seed,
        }
    }

    pub fn with_b_view(mut self, payload: Payload) -> Self {
        self.b_payload = payload;
        self
    }

    pub fn with_timeout(mut self, ticks: u64) -> Self {
        self.timeout = ticks;
        self
    }

    pub fn with_rep_mode(mut self, mode: RepMode) -> Self {
        self.rep_mode = mode;
        self
    }

    pub fn protocol(&self) -> ProtocolKind {
        self.a_payload.kind()
    }
}

/// Validated, derived per-session data shared read-only by all parties.
#[derive(Debug, Clone)]
pub struct SessionSetup {
    pub kind: ProtocolKind,
    pub session_id: SessionId,
    pub params: SystemParams,
    pub public: PublicParams,
    pub a_ctx: CembsContext,
    pub b_ctx: CembsContext,
    /// The message A signs.
    pub a_message: Message,
    /// What A accepts from B.
    pub a_expect: Expectation,
    /// B's item: a message to sign, or data to release.
    pub b_item: BItem,
    /// What B accepts from A.
    pub b_expect: Expectation,
    pub timeout: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BItem {
    Sign(Message),
    Release(Vec<u8>),
}

pub fn session_id_for(seed: &[u8; 32]) -> SessionId {
    let mut input = b"cembs/session".to_vec();
    input.extend_from_slice(seed);
    arith::sha256(&input)[..16].try_into().expect("16-byte prefix")
}

impl SessionSetup {
    pub fn new(cfg: &SessionConfig) -> Result<SessionSetup> {
        let violations = keys::validate_params(&cfg.params);
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::Session(format!(
                "invalid system parameters: {}",
                list.join("; ")
            )));
        }
        if cfg.a_payload.kind() != cfg.b_payload.kind() {
            return Err(Error::Session("parties disagree on the protocol variant".into()));
        }
        if cfg.timeout == 0 {
            return Err(Error::Session("timeout must be at least one tick".into()));
        }
        let sp = &cfg.params;
        let n_a = &sp.a_rsa.public.n;
        let n_b = &sp.b_rsa.public.n;
        let sig_rep = |raw: &[u8], n: &BigUint, mode| rsa::message_rep(raw, n, mode);

        let (a_message, a_expect) = match &cfg.a_payload {
            Payload::Common { message } => (
                sig_rep(message, n_a, cfg.rep_mode)?,
                Expectation::Signature {
                    rep: sig_rep(message, n_b, cfg.rep_mode)?.rep,
                },
            ),
            Payload::Linked { file_a, file_b } => {
                let (m_a, m_b) = link_messages(file_a, file_b);
                (
                    sig_rep(&m_a, n_a, RepMode::Hashed)?,
                    Expectation::Signature {
                        rep: sig_rep(&m_b, n_b, RepMode::Hashed)?.rep,
                    },
                )
            }
            Payload::Data { data } => {
                let digest = arith::sha256(data);
                (
                    Message {
                        raw: digest.to_vec(),
                        rep: arith::decode(&digest) % n_a,
                    },
                    Expectation::DataDigest(digest),
                )
            }
        };

        let (b_item, b_expect) = match &cfg.b_payload {
            Payload::Common { message } => (
                BItem::Sign(sig_rep(message, n_b, cfg.rep_mode)?),
                Expectation::Signature {
                    rep: sig_rep(message, n_a, cfg.rep_mode)?.rep,
                },
            ),
            Payload::Linked { file_a, file_b } => {
                let (m_a, m_b) = link_messages(file_a, file_b);
                (
                    BItem::Sign(sig_rep(&m_b, n_b, RepMode::Hashed)?),
                    Expectation::Signature {
                        rep: sig_rep(&m_a, n_a, RepMode::Hashed)?.rep,
                    },
                )
            }
            Payload::Data { data } => {
                if embed_data(data) >= sp.a_elg.public.modulus {
                    return Err(Error::Session(format!(
                        "{}-byte data does not embed below P_A",
                        data.len()
                    )));
                }
                (
                    BItem::Release(data.clone()),
                    Expectation::Signature {
                        rep: arith::decode(&arith::sha256(data)) % n_a,
                    },
                )
            }
        };

        // A zero representative signs to zero, which is not an ElGamal plaintext.
        if a_message.rep.is_zero() {
            return Err(Error::Session("A's message representative is zero".into()));
        }
        if let BItem::Sign(m) = &b_item {
            if m.rep.is_zero() {
                return Err(Error::Session("B's message representative is zero".into()));
            }
        }

        let public = sp.public();
        Ok(SessionSetup {
            kind: cfg.protocol(),
            session_id: session_id_for(&cfg.seed),
            params: sp.clone(),
            a_ctx: CembsContext::a_side(&public),
            b_ctx: CembsContext::b_side(&public),
            public,
            a_message,
            a_expect,
            b_item,
            b_expect,
            timeout: cfg.timeout,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::DetRng;
    use crate::keys::BitProfile;

    fn params() -> SystemParams {
        SystemParams::generate(BitProfile::TOY, &mut DetRng::from_seed([11; 32])).unwrap()
    }

    #[test]
    fn oversize_data_rejected() {
        let cfg = SessionConfig::new(params(), Payload::Data { data: vec![7; 8] }, [0; 32]);
        assert!(matches!(SessionSetup::new(&cfg), Err(Error::Session(_))));
        let cfg = SessionConfig::new(params(), Payload::Data { data: b"ok".to_vec() }, [0; 32]);
        assert!(SessionSetup::new(&cfg).is_ok());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut sp = params();
        sp.sttp_elg.public.pk += 1u8;
        let cfg = SessionConfig::new(sp, Payload::Common { message: b"m".to_vec() }, [0; 32]);
        assert!(matches!(SessionSetup::new(&cfg), Err(Error::Session(_))));
    }

    #[test]
    fn mismatched_variants_rejected() {
        let cfg = SessionConfig::new(params(), Payload::Common { message: b"m".to_vec() }, [0; 32])
            .with_b_view(Payload::Data { data: b"m".to_vec() });
        assert!(SessionSetup::new(&cfg).is_err());
    }

    #[test]
    fn direct_mode_zero_message_rejected() {
        let cfg =
            SessionConfig::new(params(), Payload::Common { message: vec![] }, [0; 32]).with_rep_mode(RepMode::Direct);
        assert!(SessionSetup::new(&cfg).is_err());
        let cfg =
            SessionConfig::new(params(), Payload::Common { message: vec![2] }, [0; 32]).with_rep_mode(RepMode::Direct);
        assert_eq!(SessionSetup::new(&cfg).unwrap().a_message.rep, BigUint::from(2u8));
    }

    #[test]
    fn views_cross_check() {
        let setup = SessionSetup::new(&SessionConfig::new(
            params(),
            Payload::Linked {
                file_a: b"order".to_vec(),
                file_b: b"invoice".to_vec(),
            },
            [0; 32],
        ))
        .unwrap();
        // B's expectation of A is A's own message representative.
        assert_eq!(
            setup.b_expect,
            Expectation::Signature {
                rep: setup.a_message.rep.clone()
            }
        );
        let BItem::Sign(b_msg) = &setup.b_item else { panic!() };
        assert_eq!(setup.a_expect, Expectation::Signature { rep: b_msg.rep.clone() });
    }
}
