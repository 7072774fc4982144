use thiserror::Error;

/// Errors produced by the arithmetic, key, scheme and protocol layers.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value is not invertible modulo the given modulus")]
    NotInvertible,

    #[error("message representative does not fit below the modulus")]
    Domain,

    #[error("plaintext does not embed below the ElGamal modulus")]
    PlaintextEmbedding,

    #[error("malformed ciphertext: {0}")]
    MalformedCiphertext(String),

    #[error("key setup failed: {0}")]
    Setup(String),

    #[error("wire decode error: {0}")]
    Decode(String),

    #[error("key file error at line {line}: {reason}")]
    KeyFile { line: usize, reason: String },

    #[error("fault script error at line {line}: {reason}")]
    FaultScript { line: usize, reason: String },

    #[error("transcript error: {0}")]
    Transcript(String),

    #[error("session configuration rejected: {0}")]
    Session(String),

    #[error("audit failed: {0}")]
    Audit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
