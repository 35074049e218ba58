//! Decision procedures: randomized Miller-Rabin, the exhaustive deterministic
//! witness sweep, Lucas-Lehmer for Mersenne numbers, and trial division as an
//! independent oracle.

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use crate::arith::Natural;
use crate::entropy::{sample_uniform, EntropySource};
use crate::error::{Error, Result};
use crate::witness::{eval_witness, WitnessEvaluation, WitnessOutcome};

pub const DEFAULT_EXHAUSTION_CAP: u64 = 1_000_000;
pub const DEFAULT_TRIAL_DIVISION_CAP: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictTag {
    Prime,
    Composite,
}

impl VerdictTag {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictTag::Prime => "prime",
            VerdictTag::Composite => "composite",
        }
    }
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    MillerRabin,
    Exhaustive,
    LucasLehmer,
    TrialDivision,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::MillerRabin => "miller_rabin",
            Method::Exhaustive => "exhaustive",
            Method::LucasLehmer => "lucas_lehmer",
            Method::TrialDivision => "trial_division",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of a decision procedure.
///
/// `error_bound_exponent` is `Some(k)` exactly for a Miller-Rabin prime
/// verdict reached after `k` witness trials: the chance that a composite
/// survives all of them is at most `4^-k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Verdict {
    tag: VerdictTag,
    method: Method,
    error_bound_exponent: Option<u32>,
}

impl Verdict {
    /// Checked constructor.
    pub fn new(tag: VerdictTag, method: Method, error_bound_exponent: Option<u32>) -> Result<Self> {
        let verdict = Verdict {
            tag,
            method,
            error_bound_exponent,
        };
        let wants_bound = method == Method::MillerRabin && tag == VerdictTag::Prime;
        // A Miller-Rabin prime with no bound is a pre-screened small prime.
        if error_bound_exponent.is_some() && !wants_bound {
            return Err(Error::construction(format!(
                "{tag} verdict from {method} cannot carry an error bound"
            )));
        }
        Ok(verdict)
    }

    pub fn prime(method: Method) -> Self {
        Verdict {
            tag: VerdictTag::Prime,
            method,
            error_bound_exponent: None,
        }
    }

    pub fn composite(method: Method) -> Self {
        Verdict {
            tag: VerdictTag::Composite,
            method,
            error_bound_exponent: None,
        }
    }

    fn probable_prime(k: u32) -> Self {
        Verdict {
            tag: VerdictTag::Prime,
            method: Method::MillerRabin,
            error_bound_exponent: Some(k),
        }
    }

    pub fn tag(&self) -> VerdictTag {
        self.tag
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn error_bound_exponent(&self) -> Option<u32> {
        self.error_bound_exponent
    }

    pub fn is_prime(&self) -> bool {
        self.tag == VerdictTag::Prime
    }
}

/// Inputs that never reach the randomized core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PreScreen {
    /// `n` is 0 or 1: not prime, reported under the composite tag.
    Unit,
    /// `n` is 2 or 3.
    SmallPrime,
    /// Even `n >= 4`.
    Even,
}

impl PreScreen {
    pub fn classify(n: &Natural) -> Option<PreScreen> {
        match n.to_u64() {
            Some(0 | 1) => Some(PreScreen::Unit),
            Some(2 | 3) => Some(PreScreen::SmallPrime),
            _ if n.is_even() => Some(PreScreen::Even),
            _ => None,
        }
    }

    pub fn tag(self) -> VerdictTag {
        match self {
            PreScreen::SmallPrime => VerdictTag::Prime,
            PreScreen::Unit | PreScreen::Even => VerdictTag::Composite,
        }
    }

    pub fn note(self) -> &'static str {
        match self {
            PreScreen::Unit => "0 and 1 are units or zero, classified not prime (reported as composite)",
            PreScreen::SmallPrime => "2 and 3 are prime by inspection; no witnesses drawn",
            PreScreen::Even => "even n >= 4 is divisible by 2; no witnesses drawn",
        }
    }
}

/// Result of [`miller_rabin_test`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MillerRabinRun {
    pub n: Natural,
    pub k: u32,
    pub verdict: Verdict,
    /// In draw order; shorter than `k` when a witness short-circuited the run.
    pub evaluations: Vec<WitnessEvaluation>,
    pub screen: Option<PreScreen>,
}

/// Randomized Miller-Rabin with `k` witnesses drawn with replacement from
/// `source`, stopping at the first witness to compositeness.
pub fn miller_rabin_test(n: &Natural, k: u32, source: &mut EntropySource) -> Result<MillerRabinRun> {
    if k == 0 {
        return Err(Error::domain("miller_rabin_test: k must be at least 1"));
    }
    if let Some(screen) = PreScreen::classify(n) {
        let verdict = match screen.tag() {
            VerdictTag::Prime => Verdict::prime(Method::MillerRabin),
            VerdictTag::Composite => Verdict::composite(Method::MillerRabin),
        };
        return Ok(MillerRabinRun {
            n: n.clone(),
            k,
            verdict,
            evaluations: Vec::new(),
            screen: Some(screen),
        });
    }

    let mut evaluations = Vec::with_capacity(k as usize);
    for _ in 0..k {
        let b = sample_uniform(source, n)?;
        let eval = eval_witness(n, &b)?;
        let composite = eval.outcome() == WitnessOutcome::Composite;
        evaluations.push(eval);
        if composite {
            return Ok(MillerRabinRun {
                n: n.clone(),
                k,
                verdict: Verdict::composite(Method::MillerRabin),
                evaluations,
                screen: None,
            });
        }
    }
    Ok(MillerRabinRun {
        n: n.clone(),
        k,
        verdict: Verdict::probable_prime(k),
        evaluations,
        screen: None,
    })
}

/// Number of witnesses the exhaustive procedure evaluates: `floor((n-1)/4) + 1`.
pub fn exhaustive_witness_count(n: &Natural) -> Natural {
    match n.checked_sub(&Natural::one()) {
        Some(m) => &(&m >> 2) + 1,
        None => Natural::one(),
    }
}

/// Result of [`exhaustive_deterministic_test`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExhaustiveRun {
    pub n: Natural,
    pub verdict: Verdict,
    pub evaluations: Vec<WitnessEvaluation>,
}

/// Deterministic primality by evaluating `W_n` on `b = 1, ..., floor((n-1)/4) + 1`.
///
/// For composite `n > 4` at most a quarter of `[1, n)` are non-witnesses, so
/// that many distinct values must include a witness.
pub fn exhaustive_deterministic_test(n: &Natural) -> Result<ExhaustiveRun> {
    exhaustive_deterministic_test_capped(n, DEFAULT_EXHAUSTION_CAP)
}

pub fn exhaustive_deterministic_test_capped(n: &Natural, cap: u64) -> Result<ExhaustiveRun> {
    let value = match n.to_u64() {
        Some(v) if v <= cap => v,
        _ => {
            return Err(Error::ResourceLimit {
                what: "exhaustive test input",
                limit: cap,
            })
        }
    };
    if value < 5 || value % 2 == 0 {
        return Err(Error::domain(format!(
            "exhaustive test needs odd n >= 5, got {value}; small and even inputs are pre-screened"
        )));
    }

    let m = (value - 1) / 4 + 1;
    let mut evaluations = Vec::new();
    for b in 1..=m {
        let eval = eval_witness(n, &Natural::from(b))?;
        let composite = eval.outcome() == WitnessOutcome::Composite;
        evaluations.push(eval);
        if composite {
            return Ok(ExhaustiveRun {
                n: n.clone(),
                verdict: Verdict::composite(Method::Exhaustive),
                evaluations,
            });
        }
    }
    Ok(ExhaustiveRun {
        n: n.clone(),
        verdict: Verdict::prime(Method::Exhaustive),
        evaluations,
    })
}

/// Residues `s_0, ..., s_{p-2}` of the Lucas-Lehmer recurrence modulo `2^p - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LLTrace {
    pub p: u64,
    pub residues: Vec<Natural>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LucasLehmerRun {
    pub verdict: Verdict,
    pub trace: LLTrace,
}

/// Lucas-Lehmer test of `M_p = 2^p - 1` for prime `p`.
pub fn lucas_lehmer(p: u64) -> Result<LucasLehmerRun> {
    lucas_lehmer_with_progress(p, |_, _| {})
}

/// As [`lucas_lehmer`], calling `progress(done, total)` after every squaring.
pub fn lucas_lehmer_with_progress(p: u64, mut progress: impl FnMut(u64, u64)) -> Result<LucasLehmerRun> {
    if p < 2 {
        return Err(Error::domain(format!("lucas_lehmer: exponent {p} must be at least 2")));
    }
    if !trial_division_u64(p, DEFAULT_TRIAL_DIVISION_CAP)?.is_prime() {
        return Err(Error::domain(format!("lucas_lehmer: exponent {p} is not prime")));
    }
    if p == 2 {
        return Ok(LucasLehmerRun {
            verdict: Verdict::prime(Method::LucasLehmer),
            trace: LLTrace {
                p,
                residues: Vec::new(),
            },
        });
    }

    let trace = lucas_lehmer_residues(p, &mut progress);
    let verdict = if trace.last().is_some_and(Natural::is_zero) {
        Verdict::prime(Method::LucasLehmer)
    } else {
        Verdict::composite(Method::LucasLehmer)
    };
    Ok(LucasLehmerRun {
        verdict,
        trace: LLTrace { p, residues: trace },
    })
}

/// `s_0 = 4`, `s_{i+1} = s_i^2 - 2 mod M_p`, for `p >= 3`.
pub(crate) fn lucas_lehmer_residues(p: u64, progress: &mut impl FnMut(u64, u64)) -> Vec<Natural> {
    let modulus = Natural::mersenne(p);
    let total = p - 2;
    let mut residues = Vec::with_capacity(p as usize - 1);
    let mut s = Natural::from(4u32).rem_mersenne(p, &modulus);
    for i in 0..total {
        // s^2 + (M_p - 2) keeps the subtraction nonnegative
        let next = (&(&s * &s) + &modulus).checked_sub(&Natural::from(2u32)).expect("M_p >= 7");
        residues.push(core::mem::replace(&mut s, next.rem_mersenne(p, &modulus)));
        progress(i + 1, total);
    }
    residues.push(s);
    residues
}

/// Trial division oracle for `n <= 2^32`.
pub fn trial_division(n: &Natural) -> Result<Verdict> {
    trial_division_capped(n, DEFAULT_TRIAL_DIVISION_CAP)
}

pub fn trial_division_capped(n: &Natural, cap: u64) -> Result<Verdict> {
    match n.to_u64() {
        Some(v) => trial_division_u64(v, cap),
        None => Err(Error::ResourceLimit {
            what: "trial division input",
            limit: cap,
        }),
    }
}

fn trial_division_u64(n: u64, cap: u64) -> Result<Verdict> {
    if n > cap {
        return Err(Error::ResourceLimit {
            what: "trial division input",
            limit: cap,
        });
    }
    if n < 2 {
        return Ok(Verdict::composite(Method::TrialDivision));
    }
    let mut d = 2u64;
    while d <= n / d {
        if n.is_multiple_of(d) {
            return Ok(Verdict::composite(Method::TrialDivision));
        }
        d += 1;
    }
    Ok(Verdict::prime(Method::TrialDivision))
}
