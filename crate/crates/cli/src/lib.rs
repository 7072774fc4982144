//! `cembs` command line: key generation, simulated sessions, transcript
//! audit and test-vector export.
//!
//! Exit status: 0 for a fair (or successful) outcome, 1 for an unfair one,
//! 2 for usage, I/O or malformed-input errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use cembs_core::harness::{self, fault, AuditKeys, FaultScript, Transcript};
use cembs_core::keyfile;
use cembs_core::protocol::{Payload, ProtocolKind, SessionConfig, DEFAULT_TIMEOUT};
use cembs_core::{vectors, BitProfile, DetRng, Error, SystemParams};

pub const EXIT_FAIR: i32 = 0;
pub const EXIT_UNFAIR: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cembs", version, about = "Fair exchange of signatures with an offline STTP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate keys for A, B and the STTP.
    Keygen {
        /// toy, toy-safe, paper or paper-safe.
        #[arg(long, default_value = "toy")]
        profile: String,
        #[arg(long)]
        seed: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write a copy without private values.
        #[arg(long)]
        public_out: Option<PathBuf>,
    },
    /// Run one exchange session over the simulated transport.
    Run {
        /// common, linked or data-for-sig.
        #[arg(long)]
        protocol: String,
        #[arg(long)]
        keys: PathBuf,
        #[arg(long)]
        seed: String,
        /// A fault script file, a shipped script name, or `none`.
        #[arg(long, default_value = "none")]
        fault: String,
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Message both parties sign (common).
        #[arg(long, default_value = "contract")]
        message: String,
        /// A's file (linked).
        #[arg(long)]
        file_a: Option<PathBuf>,
        /// B's file (linked).
        #[arg(long)]
        file_b: Option<PathBuf>,
        /// B's data (data-for-sig); must embed below A's ElGamal modulus.
        #[arg(long, default_value = "k")]
        data: String,
        #[arg(long, default_value_t = DEFAULT_TIMEOUT)]
        timeout: u64,
        /// Run each party on its own thread.
        #[arg(long)]
        threaded: bool,
    },
    /// Re-check a transcript and report whether the exchange was fair.
    Audit {
        #[arg(long)]
        transcript: PathBuf,
        #[arg(long)]
        keys: PathBuf,
    },
    /// Write the deterministic test vectors.
    Vectors {
        #[arg(long)]
        out: PathBuf,
    },
    /// List the shipped fault scripts.
    Faults,
}

#[derive(Debug)]
struct CliError(String);

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn load_fault(spec: &str) -> Result<FaultScript, CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        return Ok(FaultScript::parse(&read(path)?)?);
    }
    fault::shipped(spec).ok_or_else(|| CliError(format!("{spec:?} is neither a file nor a shipped fault script")))
}

fn load_full_keys(path: &Path) -> Result<SystemParams, CliError> {
    keyfile::parse_keys(&read(path)?)?.full.ok_or_else(|| {
        CliError(format!(
            "{}: running a session needs the private key file",
            path.display()
        ))
    })
}

fn keygen(profile: &str, seed: &str, out: &Path, public_out: Option<&Path>) -> Result<i32, CliError> {
    let profile = BitProfile::by_name(profile)?;
    let sp = SystemParams::generate(profile, &mut DetRng::from_hex(seed)?)?;
    write(out, &keyfile::write_keys(&sp))?;
    if let Some(p) = public_out {
        write(p, &keyfile::write_public_keys(&sp.public()))?;
    }
    println!("wrote {} keys to {}", profile.name, out.display());
    Ok(EXIT_FAIR)
}

#[allow(clippy::too_many_arguments)]
fn run_cmd(
    protocol: &str,
    keys: &Path,
    seed: &str,
    fault_spec: &str,
    transcript: Option<&Path>,
    payload: Payload,
    timeout: u64,
    threaded: bool,
) -> Result<i32, CliError> {
    let kind: ProtocolKind = protocol.parse()?;
    debug_assert_eq!(kind, payload.kind());
    let sp = load_full_keys(keys)?;
    let script = load_fault(fault_spec)?;
    let seed = *DetRng::from_hex(seed)?.seed();
    let cfg = SessionConfig::new(sp.clone(), payload, seed).with_timeout(timeout);
    let outcome = if threaded {
        harness::run_session_threaded(&cfg, &script)?
    } else {
        harness::run_session(&cfg, &script)?
    };
    if let Some(path) = transcript {
        write(path, &outcome.transcript.to_text())?;
    }
    let report = harness::audit(
        &outcome.transcript,
        &AuditKeys {
            public: sp.public(),
            a_elg: Some(sp.a_elg.clone()),
        },
    )?;
    println!("{}", outcome.summary(&report));
    Ok(if report.flags.fair && !outcome.stalled {
        EXIT_FAIR
    } else {
        EXIT_UNFAIR
    })
}

fn audit_cmd(transcript: &Path, keys: &Path) -> Result<i32, CliError> {
    let t = Transcript::parse(&read(transcript)?)?;
    let km = keyfile::parse_keys(&read(keys)?)?;
    let report = harness::audit(
        &t,
        &AuditKeys {
            public: km.public,
            a_elg: km.a_elg,
        },
    )?;
    println!("{report}");
    Ok(if report.flags.fair { EXIT_FAIR } else { EXIT_UNFAIR })
}

fn vectors_cmd(out: &Path) -> Result<i32, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError(format!("{}: {e}", out.display())))?;
    for (name, contents) in vectors::generate()? {
        write(&out.join(&name), &contents)?;
        println!("{}", out.join(&name).display());
    }
    Ok(EXIT_FAIR)
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Keygen {
            profile,
            seed,
            out,
            public_out,
        } => keygen(&profile, &seed, &out, public_out.as_deref()),
        Command::Run {
            protocol,
            keys,
            seed,
            fault,
            transcript,
            message,
            file_a,
            file_b,
            data,
            timeout,
            threaded,
        } => {
            let payload = match protocol.parse::<ProtocolKind>()? {
                ProtocolKind::CommonMessage => Payload::Common {
                    message: message.into_bytes(),
                },
                ProtocolKind::LinkedFiles => {
                    let (Some(a), Some(b)) = (file_a, file_b) else {
                        return Err(CliError("linked needs --file-a and --file-b".into()));
                    };
                    Payload::Linked {
                        file_a: read_bytes(&a)?,
                        file_b: read_bytes(&b)?,
                    }
                }
                ProtocolKind::DataForSignature => Payload::Data {
                    data: data.into_bytes(),
                },
            };
            run_cmd(
                &protocol,
                &keys,
                &seed,
                &fault,
                transcript.as_deref(),
                payload,
                timeout,
                threaded,
            )
        }
        Command::Audit { transcript, keys } => audit_cmd(&transcript, &keys),
        Command::Vectors { out } => vectors_cmd(&out),
        Command::Faults => {
            for (name, text) in fault::SHIPPED {
                let script = FaultScript::parse(text)?;
                println!("{name:<18}{}", script.to_text().trim_end().replace('\n', "; "));
            }
            Ok(EXIT_FAIR)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_FAIR };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            EXIT_ERROR
        }
    }
}
