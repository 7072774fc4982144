//! Simulated transport, fault injection, transcripts and audit.

pub mod audit;
pub mod fault;
pub mod runner;
pub mod transcript;
pub mod transport;

pub use audit::{audit, AuditFlags, AuditKeys, AuditReport, ExchangeCase};
pub use fault::FaultScript;
pub use runner::{run_session, run_session_threaded, SessionOutcome};
pub use transcript::Transcript;
pub use transport::Transport;
