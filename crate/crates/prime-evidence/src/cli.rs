//! Command-line front end.
//!
//! Exit codes: 0 for a prime verdict or a valid replay, 1 for a composite
//! verdict or a mismatching replay, 2 for usage, domain, resource-limit,
//! transport, I/O, and malformed-certificate errors.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use chrono::{SecondsFormat, Utc};
use clap::{Parser, Subcommand};
use prime_evidence_core::evidence::ProofTranscript;
use prime_evidence_core::testers::{
    exhaustive_deterministic_test_capped, lucas_lehmer_with_progress, DEFAULT_EXHAUSTION_CAP,
};
use prime_evidence_core::witness::{witness_density_capped, DEFAULT_ENUMERATION_CAP};
use prime_evidence_core::{
    build_record, miller_rabin_test, replay_verify, required_rounds, Certificate, EntropySource,
    FailingCondition, ReplayReport, ReplayStatus, VerdictTag, WitnessEvaluation,
};
use serde_json::json;

use crate::codec::{self, canonical_json};
use crate::literal;
use crate::sources::{self, QrngClient, QRNG_URL_ENV};

pub const EXIT_PRIME: i32 = 0;
pub const EXIT_COMPOSITE: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Bytes requested from a QRNG endpoint per round trip.
const QRNG_BATCH: usize = 64;

#[derive(Debug, Parser)]
#[command(
    name = "prime-evidence",
    version,
    about = "Miller-Rabin evidence records, deterministic primality proofs, and their replay"
)]
struct Cli {
    /// Print one canonical JSON object instead of a human summary.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Randomized Miller-Rabin test producing an evidence record.
    Test {
        /// Decimal integer or 2^p-1.
        n: String,
        #[arg(long, default_value_t = 20)]
        k: u32,
        /// seeded:<u64> | os | qrng[:<url>]
        #[arg(long, default_value = "seeded:0")]
        entropy: EntropySpec,
        #[arg(long)]
        emit: Option<PathBuf>,
        /// Write created_at as null so identical runs give identical bytes.
        #[arg(long)]
        no_timestamp: bool,
        /// QRNG request timeout in seconds.
        #[arg(long, default_value_t = 10)]
        qrng_timeout: u64,
        /// Extra attempts per failed QRNG request.
        #[arg(long, default_value_t = 0)]
        qrng_retries: u32,
    },
    /// Deterministic exhaustive witness sweep producing a proof transcript.
    Prove {
        n: String,
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
        #[arg(long, default_value_t = DEFAULT_EXHAUSTION_CAP)]
        cap: u64,
    },
    /// Replay a certificate file.
    Verify { file: PathBuf },
    /// Lucas-Lehmer test of 2^p - 1.
    Mersenne {
        /// Exponent p, or the number itself written 2^p-1.
        p: String,
        #[arg(long)]
        emit: Option<PathBuf>,
        #[arg(long)]
        no_timestamp: bool,
        /// Report iteration progress on standard error.
        #[arg(long)]
        progress: bool,
    },
    /// Rounds k needed for a 4^-k error bound at or below epsilon.
    Threshold {
        /// a/b, decimal, scientific (1e-9), or b^-e.
        #[arg(long, allow_hyphen_values = true)]
        epsilon: String,
    },
    /// Exact fraction of b in [1, n) that witness compositeness.
    Density {
        n: String,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
    },
}

/// Parsed `--entropy` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntropySpec {
    Seeded(u64),
    Os,
    /// Endpoint, or `None` to read it from the environment.
    Qrng(Option<String>),
}

impl FromStr for EntropySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "os" => Ok(EntropySpec::Os),
            "qrng" => Ok(EntropySpec::Qrng(None)),
            _ => {
                if let Some(seed) = s.strip_prefix("seeded:") {
                    seed.parse()
                        .map(EntropySpec::Seeded)
                        .map_err(|_| format!("seed {seed:?} is not a 64-bit unsigned integer"))
                } else if let Some(url) = s.strip_prefix("qrng:") {
                    if url.is_empty() {
                        Err("empty QRNG endpoint".into())
                    } else {
                        Ok(EntropySpec::Qrng(Some(url.to_owned())))
                    }
                } else {
                    Err(format!("{s:?}: expected seeded:<u64>, os, or qrng[:<url>]"))
                }
            }
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] prime_evidence_core::Error),
    #[error(transparent)]
    Literal(#[from] literal::LiteralError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    json: bool,
}

impl Io<'_> {
    fn line(&mut self, text: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", text.as_ref());
    }
}

/// Runs the tool on `argv` (including the program name) and returns the
/// process exit code.
pub fn run(
    argv: &[String],
    env: &HashMap<String, String>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_ERROR
                }
            };
        }
    };
    let mut io = Io {
        out: stdout,
        json: cli.json,
    };
    match dispatch(cli.command, env, &mut io, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(
    command: Command,
    env: &HashMap<String, String>,
    io: &mut Io<'_>,
    stderr: &mut dyn Write,
) -> Result<i32, CliError> {
    match command {
        Command::Test {
            n,
            k,
            entropy,
            emit,
            no_timestamp,
            qrng_timeout,
            qrng_retries,
        } => {
            let n = literal::parse_natural(&n)?;
            let mut source = open_source(
                &entropy,
                env,
                Duration::from_secs(qrng_timeout),
                qrng_retries,
            )?;
            let run = miller_rabin_test(&n, k, &mut source)?;
            let record = build_record(&run, source.descriptor(), timestamp(no_timestamp))?;
            let entropy_line = format!(
                "entropy: {}, {} bits consumed",
                record.entropy.provenance, record.entropy.bits_consumed
            );
            let cert = Certificate::Evidence(record);
            emit_file(emit.as_deref(), &cert)?;
            if io.json {
                io.line(canonical_json(&codec::to_value(&cert)));
            } else {
                io.line(format!("n = {n}"));
                match run.verdict.error_bound_exponent() {
                    Some(k) => io.line(format!(
                        "verdict: prime (Miller-Rabin, k = {k}, a composite survives with probability <= 4^-{k})"
                    )),
                    None => io.line(format!("verdict: {} (Miller-Rabin)", run.verdict.tag())),
                }
                if let Some(screen) = run.screen {
                    io.line(format!("note: {}", screen.note()));
                }
                describe_evaluations(io, &run.evaluations);
                io.line(entropy_line);
            }
            Ok(verdict_code(run.verdict.tag()))
        }
        Command::Prove {
            n,
            emit,
            no_timestamp,
            cap,
        } => {
            let n = literal::parse_natural(&n)?;
            let run = exhaustive_deterministic_test_capped(&n, cap)?;
            let cert = Certificate::Proof(ProofTranscript::from_exhaustive(
                &run,
                timestamp(no_timestamp),
            ));
            emit_file(emit.as_deref(), &cert)?;
            if io.json {
                io.line(canonical_json(&codec::to_value(&cert)));
            } else {
                io.line(format!("n = {n}"));
                io.line(format!("verdict: {} (exhaustive)", run.verdict.tag()));
                describe_evaluations(io, &run.evaluations);
            }
            Ok(verdict_code(run.verdict.tag()))
        }
        Command::Verify { file } => {
            let bytes = std::fs::read(&file).map_err(|source| CliError::Io {
                path: file.clone(),
                source,
            })?;
            let (cert, report) = match codec::deserialize(&bytes) {
                Ok(cert) => {
                    let report = replay_verify(&cert);
                    (Some(cert), report)
                }
                Err(e) => (None, ReplayReport::malformed(e.to_string())),
            };
            print_report(io, cert.as_ref(), &report);
            Ok(match report.status {
                ReplayStatus::Valid => EXIT_PRIME,
                ReplayStatus::Mismatch => EXIT_COMPOSITE,
                ReplayStatus::Malformed => EXIT_ERROR,
            })
        }
        Command::Mersenne {
            p,
            emit,
            no_timestamp,
            progress,
        } => {
            let p = literal::parse_exponent(&p)?;
            let step = (p / 100).max(1);
            let run = lucas_lehmer_with_progress(p, |done, total| {
                if progress && (done % step == 0 || done == total) {
                    let _ = write!(stderr, "\rLucas-Lehmer iteration {done}/{total}");
                    if done == total {
                        let _ = writeln!(stderr);
                    }
                }
            })?;
            let cert = Certificate::Proof(ProofTranscript::from_lucas_lehmer(
                &run,
                timestamp(no_timestamp),
            ));
            emit_file(emit.as_deref(), &cert)?;
            if io.json {
                io.line(canonical_json(&codec::to_value(&cert)));
            } else {
                io.line(format!("n = 2^{p}-1"));
                io.line(format!("verdict: {} (Lucas-Lehmer)", run.verdict.tag()));
                if let Some(last) = run.trace.residues.last() {
                    io.line(format!(
                        "s_{} mod (2^{p}-1) = {}",
                        run.trace.residues.len() - 1,
                        abbreviate(&last.to_decimal())
                    ));
                }
            }
            Ok(verdict_code(run.verdict.tag()))
        }
        Command::Threshold { epsilon } => {
            let (num, den) = literal::parse_epsilon(&epsilon)?;
            let k = required_rounds(&num, &den)?;
            if io.json {
                io.line(canonical_json(&json!({
                    "epsilon": format!("{num}/{den}"),
                    "rounds": k,
                })));
            } else {
                io.line(k.to_string());
            }
            Ok(0)
        }
        Command::Density { n, cap } => {
            let n = literal::parse_natural(&n)?;
            let density = witness_density_capped(&n, cap)?;
            if io.json {
                let (rn, rd) = density.reduced();
                io.line(canonical_json(&json!({
                    "candidates": density.candidates,
                    "fraction": density.to_string(),
                    "n": n.to_decimal(),
                    "reduced": format!("{rn}/{rd}"),
                    "witnesses": density.witnesses,
                })));
            } else {
                io.line(density.to_string());
            }
            Ok(0)
        }
    }
}

fn verdict_code(tag: VerdictTag) -> i32 {
    match tag {
        VerdictTag::Prime => EXIT_PRIME,
        VerdictTag::Composite => EXIT_COMPOSITE,
    }
}

fn timestamp(disabled: bool) -> Option<String> {
    (!disabled).then(|| Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true))
}

fn open_source(
    spec: &EntropySpec,
    env: &HashMap<String, String>,
    timeout: Duration,
    retries: u32,
) -> Result<EntropySource, CliError> {
    Ok(match spec {
        EntropySpec::Seeded(seed) => EntropySource::seeded(*seed),
        EntropySpec::Os => sources::os_source(),
        EntropySpec::Qrng(endpoint) => {
            let endpoint = match endpoint {
                Some(url) => url.clone(),
                None => env
                    .get(QRNG_URL_ENV)
                    .filter(|v| !v.is_empty())
                    .cloned()
                    .ok_or_else(|| {
                        CliError::Usage(format!(
                            "--entropy qrng needs an endpoint: use qrng:<url> or set {QRNG_URL_ENV}"
                        ))
                    })?,
            };
            sources::qrng_source(QrngClient::with_options(endpoint, timeout, retries), QRNG_BATCH)
        }
    })
}

fn emit_file(path: Option<&Path>, cert: &Certificate) -> Result<(), CliError> {
    if let Some(path) = path {
        std::fs::write(path, codec::serialize(cert)).map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })?;
    }
    Ok(())
}

fn describe_evaluations(io: &mut Io<'_>, evaluations: &[WitnessEvaluation]) {
    if evaluations.is_empty() {
        return;
    }
    let list: Vec<String> = evaluations.iter().map(|e| e.b().to_string()).collect();
    io.line(format!(
        "witnesses ({}): {}",
        evaluations.len(),
        abbreviate(&list.join(" "))
    ));
    if let Some(last) = evaluations.last() {
        match last.failing_condition() {
            Some(FailingCondition::FermatFail) => io.line(format!(
                "b = {} witnesses compositeness: b^(n-1) mod n != 1",
                abbreviate(&last.b().to_string())
            )),
            Some(FailingCondition::GcdSplit { i }) => io.line(format!(
                "b = {} witnesses compositeness: gcd(b^((n-1)/2^{i}) - 1, n) is a proper divisor",
                abbreviate(&last.b().to_string())
            )),
            None => {}
        }
    }
}

fn print_report(io: &mut Io<'_>, cert: Option<&Certificate>, report: &ReplayReport) {
    if io.json {
        let value = json!({
            "mismatches": report.mismatches.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "note": report.note,
            "problems": report.problems,
            "status": report.status.as_str(),
        });
        io.line(canonical_json(&value));
        return;
    }
    if let Some(cert) = cert {
        let kind = match cert {
            Certificate::Evidence(_) => "evidence record",
            Certificate::Proof(t) => match t.method() {
                prime_evidence_core::Method::LucasLehmer => "Lucas-Lehmer proof",
                _ => "exhaustive proof",
            },
        };
        io.line(format!(
            "{kind} for n = {}, recorded verdict {}",
            abbreviate(&cert.n().to_decimal()),
            cert.verdict().tag()
        ));
    }
    io.line(format!("status: {}", report.status));
    for m in &report.mismatches {
        io.line(format!("mismatch: {m}"));
    }
    for p in &report.problems {
        io.line(format!("problem: {p}"));
    }
    io.line(format!("note: {}", report.note));
}

/// Long decimals shortened to head...tail for terminal output.
fn abbreviate(s: &str) -> String {
    const KEEP: usize = 40;
    if s.len() <= 2 * KEEP + 3 {
        return s.to_owned();
    }
    format!("{}...{} ({} chars)", &s[..KEEP], &s[s.len() - KEEP..], s.len())
}
