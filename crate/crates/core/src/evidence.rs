//! Certificates of two kinds and their replay.
//!
//! An [`EvidenceRecord`] captures a randomized Miller-Rabin run: evidence that
//! a proof of primality exists, with the error bound it carries. A
//! [`ProofTranscript`] captures a deterministic run (exhaustive witness sweep
//! or Lucas-Lehmer) whose replay is a complete check.
//!
//! Replay recomputes deterministic consequences of what was recorded. It never
//! draws fresh randomness, and a `Valid` report certifies only that the record
//! is faithful, not that its verdict is true.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::arith::Natural;
use crate::entropy::EntropyDescriptor;
use crate::error::{Error, Result};
use crate::testers::{
    exhaustive_witness_count, lucas_lehmer_residues, trial_division, ExhaustiveRun, LLTrace,
    LucasLehmerRun, Method, MillerRabinRun, PreScreen, Verdict, VerdictTag,
};
use crate::witness::{eval_witness, WitnessOutcome};

pub const FORMAT_VERSION: u32 = 1;

/// Attached to every [`ReplayReport`].
pub const FIDELITY_DISCLAIMER: &str = "replay confirms that the recorded outcomes follow from the recorded inputs; \
it does not independently establish the truth of the verdict";

/// Transcript of a randomized Miller-Rabin run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvidenceRecord {
    pub n: Natural,
    pub k: u32,
    pub witnesses: Vec<Natural>,
    pub outcomes: Vec<WitnessOutcome>,
    /// Carries the error-bound exponent.
    pub verdict: Verdict,
    pub entropy: EntropyDescriptor,
    /// RFC 3339 UTC; informational only.
    pub created_at: Option<String>,
    pub format_version: u32,
}

impl EvidenceRecord {
    pub fn error_bound_exponent(&self) -> Option<u32> {
        self.verdict.error_bound_exponent()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProofDetail {
    Exhaustive {
        witnesses: Vec<Natural>,
        outcomes: Vec<WitnessOutcome>,
    },
    LucasLehmer(LLTrace),
}

/// Transcript of a deterministic run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTranscript {
    pub n: Natural,
    pub detail: ProofDetail,
    pub verdict: Verdict,
    pub created_at: Option<String>,
    pub format_version: u32,
}

impl ProofTranscript {
    pub fn method(&self) -> Method {
        match self.detail {
            ProofDetail::Exhaustive { .. } => Method::Exhaustive,
            ProofDetail::LucasLehmer(_) => Method::LucasLehmer,
        }
    }

    pub fn from_exhaustive(run: &ExhaustiveRun, created_at: Option<String>) -> Self {
        ProofTranscript {
            n: run.n.clone(),
            detail: ProofDetail::Exhaustive {
                witnesses: run.evaluations.iter().map(|e| e.b().clone()).collect(),
                outcomes: run.evaluations.iter().map(|e| e.outcome()).collect(),
            },
            verdict: run.verdict,
            created_at,
            format_version: FORMAT_VERSION,
        }
    }

    pub fn from_lucas_lehmer(run: &LucasLehmerRun, created_at: Option<String>) -> Self {
        ProofTranscript {
            n: Natural::mersenne(run.trace.p),
            detail: ProofDetail::LucasLehmer(run.trace.clone()),
            verdict: run.verdict,
            created_at,
            format_version: FORMAT_VERSION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Evidence(EvidenceRecord),
    Proof(ProofTranscript),
}

impl Certificate {
    pub fn n(&self) -> &Natural {
        match self {
            Certificate::Evidence(r) => &r.n,
            Certificate::Proof(t) => &t.n,
        }
    }

    pub fn verdict(&self) -> Verdict {
        match self {
            Certificate::Evidence(r) => r.verdict,
            Certificate::Proof(t) => t.verdict,
        }
    }
}

impl From<EvidenceRecord> for Certificate {
    fn from(r: EvidenceRecord) -> Self {
        Certificate::Evidence(r)
    }
}

impl From<ProofTranscript> for Certificate {
    fn from(t: ProofTranscript) -> Self {
        Certificate::Proof(t)
    }
}

/// Materializes an [`EvidenceRecord`] from a Miller-Rabin run, rejecting runs
/// whose parts disagree.
pub fn build_record(
    run: &MillerRabinRun,
    entropy: EntropyDescriptor,
    created_at: Option<String>,
) -> Result<EvidenceRecord> {
    let record = EvidenceRecord {
        n: run.n.clone(),
        k: run.k,
        witnesses: run.evaluations.iter().map(|e| e.b().clone()).collect(),
        outcomes: run.evaluations.iter().map(|e| e.outcome()).collect(),
        verdict: run.verdict,
        entropy,
        created_at,
        format_version: FORMAT_VERSION,
    };
    if let Some(e) = run.evaluations.iter().find(|e| *e.n() != run.n) {
        return Err(Error::construction(format!(
            "evaluation for n = {} in a run for n = {}",
            e.n(),
            run.n
        )));
    }
    if run.screen != PreScreen::classify(&run.n) {
        return Err(Error::construction("pre-screen classification does not match n"));
    }
    if let Some(problem) = shape_problem_evidence(&record) {
        return Err(Error::construction(problem));
    }
    if let Some(d) = verdict_discrepancy_evidence(&record, &record.outcomes) {
        return Err(Error::construction(format!("{d}")));
    }
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayStatus {
    Valid,
    Mismatch,
    Malformed,
}

impl ReplayStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ReplayStatus::Valid => "valid",
            ReplayStatus::Mismatch => "mismatch",
            ReplayStatus::Malformed => "malformed",
        }
    }
}

impl fmt::Display for ReplayStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A way in which recomputation disagrees with a record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Discrepancy {
    Outcome {
        index: usize,
        recorded: WitnessOutcome,
        recomputed: WitnessOutcome,
    },
    Residue {
        index: usize,
        recorded: Natural,
        recomputed: Natural,
    },
    TraceLength {
        recorded: usize,
        recomputed: usize,
    },
    /// Exhaustive witnesses must be `1, 2, 3, ...` in order.
    WitnessSequence { index: usize, recorded: Natural },
    /// A witness to compositeness appears before the end of the list.
    ContinuedAfterWitness { index: usize },
    /// Fewer evaluations than the method requires, with no witness found.
    Truncated { recorded: usize, required: String },
    Verdict {
        recorded: VerdictTag,
        recorded_bound: Option<u32>,
        expected: VerdictTag,
        expected_bound: Option<u32>,
    },
}

impl fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Discrepancy::Outcome {
                index,
                recorded,
                recomputed,
            } => write!(f, "outcome {index}: recorded {recorded}, recomputed {recomputed}"),
            Discrepancy::Residue {
                index,
                recorded,
                recomputed,
            } => write!(f, "residue {index}: recorded {recorded}, recomputed {recomputed}"),
            Discrepancy::TraceLength {
                recorded,
                recomputed,
            } => write!(f, "trace has {recorded} residues, expected {recomputed}"),
            Discrepancy::WitnessSequence { index, recorded } => {
                write!(f, "witness {index} is {recorded}, expected {}", index + 1)
            }
            Discrepancy::ContinuedAfterWitness { index } => {
                write!(f, "evaluations continue after the witness at index {index}")
            }
            Discrepancy::Truncated { recorded, required } => {
                write!(f, "{recorded} evaluations recorded, {required} required for a prime verdict")
            }
            Discrepancy::Verdict {
                recorded,
                recorded_bound,
                expected,
                expected_bound,
            } => write!(
                f,
                "verdict {recorded} (bound {}) but outcomes imply {expected} (bound {})",
                fmt_bound(*recorded_bound),
                fmt_bound(*expected_bound)
            ),
        }
    }
}

fn fmt_bound(bound: Option<u32>) -> String {
    match bound {
        Some(k) => format!("4^-{k}"),
        None => String::from("none"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayReport {
    pub status: ReplayStatus,
    pub mismatches: Vec<Discrepancy>,
    /// Why the record could not be replayed; empty unless `Malformed`.
    pub problems: Vec<String>,
    pub note: &'static str,
}

impl ReplayReport {
    pub fn malformed(problem: impl Into<String>) -> Self {
        ReplayReport {
            status: ReplayStatus::Malformed,
            mismatches: Vec::new(),
            problems: alloc::vec![problem.into()],
            note: FIDELITY_DISCLAIMER,
        }
    }

    fn from_mismatches(mismatches: Vec<Discrepancy>) -> Self {
        let status = if mismatches.is_empty() {
            ReplayStatus::Valid
        } else {
            ReplayStatus::Mismatch
        };
        ReplayReport {
            status,
            mismatches,
            problems: Vec::new(),
            note: FIDELITY_DISCLAIMER,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.status == ReplayStatus::Valid
    }
}

/// Re-derives every recorded outcome (or the Lucas-Lehmer trail) and checks
/// that the verdict follows from them.
pub fn replay_verify(certificate: &Certificate) -> ReplayReport {
    match certificate {
        Certificate::Evidence(r) => replay_evidence(r),
        Certificate::Proof(t) => replay_proof(t),
    }
}

pub fn replay_evidence(record: &EvidenceRecord) -> ReplayReport {
    if let Some(problem) = shape_problem_evidence(record) {
        return ReplayReport::malformed(problem);
    }
    let recomputed = match recompute_outcomes(&record.n, &record.witnesses) {
        Ok(o) => o,
        Err(e) => return ReplayReport::malformed(format!("{e}")),
    };
    let mut mismatches = outcome_mismatches(&record.outcomes, &recomputed);
    mismatches.extend(verdict_discrepancy_evidence(record, &recomputed));
    ReplayReport::from_mismatches(mismatches)
}

pub fn replay_proof(transcript: &ProofTranscript) -> ReplayReport {
    if transcript.format_version != FORMAT_VERSION {
        return ReplayReport::malformed(format!(
            "unsupported format_version {}",
            transcript.format_version
        ));
    }
    if transcript.verdict.method() != transcript.method() {
        return ReplayReport::malformed(format!(
            "verdict method {} does not match transcript method {}",
            transcript.verdict.method(),
            transcript.method()
        ));
    }
    match &transcript.detail {
        ProofDetail::Exhaustive {
            witnesses,
            outcomes,
        } => replay_exhaustive(transcript, witnesses, outcomes),
        ProofDetail::LucasLehmer(trace) => replay_lucas_lehmer(transcript, trace),
    }
}

fn replay_exhaustive(
    transcript: &ProofTranscript,
    witnesses: &[Natural],
    outcomes: &[WitnessOutcome],
) -> ReplayReport {
    let n = &transcript.n;
    if n < &Natural::from(5u32) || n.is_even() {
        return ReplayReport::malformed(format!("exhaustive transcript for n = {n}; needs odd n >= 5"));
    }
    if witnesses.len() != outcomes.len() {
        return ReplayReport::malformed(format!(
            "{} witnesses but {} outcomes",
            witnesses.len(),
            outcomes.len()
        ));
    }
    let required = exhaustive_witness_count(n);
    if Natural::from(witnesses.len() as u64) > required {
        return ReplayReport::malformed(format!(
            "{} evaluations exceed the {required} the procedure performs",
            witnesses.len()
        ));
    }

    let mut mismatches: Vec<Discrepancy> = witnesses
        .iter()
        .enumerate()
        .filter(|(i, w)| **w != Natural::from(*i as u64 + 1))
        .map(|(index, w)| Discrepancy::WitnessSequence {
            index,
            recorded: w.clone(),
        })
        .collect();
    let recomputed = match recompute_outcomes(n, witnesses) {
        Ok(o) => o,
        Err(e) => return ReplayReport::malformed(format!("{e}")),
    };
    mismatches.extend(outcome_mismatches(outcomes, &recomputed));

    let expected = match first_witness(&recomputed) {
        Some(index) => {
            if index + 1 != recomputed.len() {
                mismatches.push(Discrepancy::ContinuedAfterWitness { index });
            }
            VerdictTag::Composite
        }
        None if Natural::from(recomputed.len() as u64) == required => VerdictTag::Prime,
        None => {
            mismatches.push(Discrepancy::Truncated {
                recorded: recomputed.len(),
                required: required.to_decimal(),
            });
            VerdictTag::Composite
        }
    };
    mismatches.extend(verdict_check(transcript.verdict, expected, None));
    ReplayReport::from_mismatches(mismatches)
}

fn replay_lucas_lehmer(transcript: &ProofTranscript, trace: &LLTrace) -> ReplayReport {
    let n = &transcript.n;
    let p = n.bit_length();
    if p < 2 || *n != Natural::mersenne(p) {
        return ReplayReport::malformed(format!("n = {n} is not a Mersenne number 2^p - 1 with p >= 2"));
    }
    if trace.p != p {
        return ReplayReport::malformed(format!("trace exponent {} but n = 2^{p} - 1", trace.p));
    }
    match trial_division(&Natural::from(p)) {
        Ok(v) if v.is_prime() => {}
        Ok(_) => return ReplayReport::malformed(format!("exponent {p} is not prime")),
        Err(e) => return ReplayReport::malformed(format!("{e}")),
    }

    let recomputed = if p == 2 {
        Vec::new()
    } else {
        lucas_lehmer_residues(p, &mut |_, _| {})
    };
    let mut mismatches = Vec::new();
    if trace.residues.len() != recomputed.len() {
        mismatches.push(Discrepancy::TraceLength {
            recorded: trace.residues.len(),
            recomputed: recomputed.len(),
        });
    }
    mismatches.extend(
        trace
            .residues
            .iter()
            .zip(&recomputed)
            .enumerate()
            .filter(|(_, (r, c))| r != c)
            .map(|(index, (r, c))| Discrepancy::Residue {
                index,
                recorded: r.clone(),
                recomputed: c.clone(),
            }),
    );
    let expected = if p == 2 || recomputed.last().is_some_and(Natural::is_zero) {
        VerdictTag::Prime
    } else {
        VerdictTag::Composite
    };
    mismatches.extend(verdict_check(transcript.verdict, expected, None));
    ReplayReport::from_mismatches(mismatches)
}

/// Structural defects that make an evidence record impossible to replay.
fn shape_problem_evidence(record: &EvidenceRecord) -> Option<String> {
    if record.format_version != FORMAT_VERSION {
        return Some(format!("unsupported format_version {}", record.format_version));
    }
    if record.k == 0 {
        return Some(String::from("k must be at least 1"));
    }
    if record.verdict.method() != Method::MillerRabin {
        return Some(format!(
            "evidence record carries a {} verdict",
            record.verdict.method()
        ));
    }
    if record.witnesses.len() != record.outcomes.len() {
        return Some(format!(
            "{} witnesses but {} outcomes",
            record.witnesses.len(),
            record.outcomes.len()
        ));
    }
    if record.witnesses.len() > record.k as usize {
        return Some(format!(
            "{} witnesses exceed k = {}",
            record.witnesses.len(),
            record.k
        ));
    }
    if PreScreen::classify(&record.n).is_some() {
        if !record.witnesses.is_empty() {
            return Some(format!("n = {} is pre-screened and takes no witnesses", record.n));
        }
    } else if let Some(w) = record
        .witnesses
        .iter()
        .find(|w| w.is_zero() || **w >= record.n)
    {
        return Some(format!("witness {w} outside [1, {})", record.n));
    }
    None
}

/// Checks the recorded verdict against the given outcomes (assumes a
/// well-shaped record).
fn verdict_discrepancy_evidence(
    record: &EvidenceRecord,
    outcomes: &[WitnessOutcome],
) -> Option<Discrepancy> {
    let (expected, expected_bound, extra) = match PreScreen::classify(&record.n) {
        Some(screen) => (screen.tag(), None, None),
        None => match first_witness(outcomes) {
            Some(index) if index + 1 != outcomes.len() => (
                VerdictTag::Composite,
                None,
                Some(Discrepancy::ContinuedAfterWitness { index }),
            ),
            Some(_) => (VerdictTag::Composite, None, None),
            None if outcomes.len() == record.k as usize => {
                (VerdictTag::Prime, Some(record.k), None)
            }
            None => (
                VerdictTag::Composite,
                None,
                Some(Discrepancy::Truncated {
                    recorded: outcomes.len(),
                    required: format!("{}", record.k),
                }),
            ),
        },
    };
    extra.or_else(|| verdict_check(record.verdict, expected, expected_bound))
}

fn verdict_check(recorded: Verdict, expected: VerdictTag, expected_bound: Option<u32>) -> Option<Discrepancy> {
    (recorded.tag() != expected || recorded.error_bound_exponent() != expected_bound).then(|| {
        Discrepancy::Verdict {
            recorded: recorded.tag(),
            recorded_bound: recorded.error_bound_exponent(),
            expected,
            expected_bound,
        }
    })
}

fn first_witness(outcomes: &[WitnessOutcome]) -> Option<usize> {
    outcomes.iter().position(|o| *o == WitnessOutcome::Composite)
}

fn recompute_outcomes(n: &Natural, witnesses: &[Natural]) -> Result<Vec<WitnessOutcome>> {
    witnesses
        .iter()
        .map(|b| eval_witness(n, b).map(|e| e.outcome()))
        .collect()
}

fn outcome_mismatches(recorded: &[WitnessOutcome], recomputed: &[WitnessOutcome]) -> Vec<Discrepancy> {
    recorded
        .iter()
        .zip(recomputed)
        .enumerate()
        .filter(|(_, (r, c))| r != c)
        .map(|(index, (r, c))| Discrepancy::Outcome {
            index,
            recorded: *r,
            recomputed: *c,
        })
        .collect()
}

/// Least `k` with `4^-k <= numerator / denominator`, for an error threshold
/// strictly between 0 and 1. Exact integer arithmetic throughout.
pub fn required_rounds(numerator: &Natural, denominator: &Natural) -> Result<u32> {
    if numerator.is_zero() || numerator >= denominator {
        return Err(Error::domain(format!(
            "required_rounds: epsilon = {numerator}/{denominator} must lie strictly between 0 and 1"
        )));
    }
    // 4^k * numerator >= denominator
    let mut scaled = numerator.clone();
    let mut k = 0u32;
    while scaled < *denominator {
        scaled = &scaled << 2;
        k += 1;
    }
    Ok(k)
}
