//! The witness-to-compositeness function `W_n(b)` and exhaustive measurement
//! of its witness density.
//!
//! `W_n(b)` reports [`WitnessOutcome::Composite`] when either
//!
//! * `b^(n-1) mod n != 1` (a Fermat failure), or
//! * for some `i` with `2^i | n-1`, `gcd(b^((n-1)/2^i) - 1, n)` is neither 1
//!   nor `n` (a gcd split),
//!
//! and [`WitnessOutcome::Indeterminate`] otherwise. The index `i` ranges over
//! `1..=s` where `2^s` exactly divides `n - 1`: at `i = 0` the gcd is
//! `gcd(b^(n-1) - 1, n)`, which equals `n` whenever the Fermat condition
//! passes, so that case can never fire.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::arith::{gcd, mod_pow, two_adic_split, Natural};
use crate::error::{Error, Result};

/// Upper bound on `n` accepted by [`witness_density`] unless overridden.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WitnessOutcome {
    Composite,
    Indeterminate,
}

impl WitnessOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            WitnessOutcome::Composite => "composite",
            WitnessOutcome::Indeterminate => "indeterminate",
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            WitnessOutcome::Composite => WitnessOutcome::Indeterminate,
            WitnessOutcome::Indeterminate => WitnessOutcome::Composite,
        }
    }
}

impl fmt::Display for WitnessOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which disjunct of `W_n(b)` fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailingCondition {
    /// `b^(n-1) mod n != 1`.
    FermatFail,
    /// `gcd(b^((n-1)/2^i) - 1, n)` is a proper divisor; `i` is the smallest such index.
    GcdSplit { i: u64 },
}

/// One application of `W_n` to a candidate witness `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessEvaluation {
    n: Natural,
    b: Natural,
    failing_condition: Option<FailingCondition>,
}

impl WitnessEvaluation {
    pub fn n(&self) -> &Natural {
        &self.n
    }

    pub fn b(&self) -> &Natural {
        &self.b
    }

    pub fn outcome(&self) -> WitnessOutcome {
        match self.failing_condition {
            Some(_) => WitnessOutcome::Composite,
            None => WitnessOutcome::Indeterminate,
        }
    }

    /// Present exactly when the outcome is composite.
    pub fn failing_condition(&self) -> Option<FailingCondition> {
        self.failing_condition
    }
}

/// Evaluates `W_n(b)` for `n >= 3` and `1 <= b < n`.
///
/// Even `n` is accepted; the definition is total there and callers decide
/// whether to pre-screen.
pub fn eval_witness(n: &Natural, b: &Natural) -> Result<WitnessEvaluation> {
    if *n < Natural::from(3u32) {
        return Err(Error::domain(alloc::format!(
            "eval_witness: n = {n} must be at least 3"
        )));
    }
    if b.is_zero() || b >= n {
        return Err(Error::domain(alloc::format!(
            "eval_witness: witness {b} outside [1, {n})"
        )));
    }

    let n_minus_1 = n.checked_sub(&Natural::one()).expect("n >= 3");
    let split = two_adic_split(&n_minus_1)?;

    // powers[j] = b^(d * 2^j) mod n for j in 0..=s, so powers[s] = b^(n-1)
    // and b^((n-1)/2^i) = powers[s - i].
    let mut powers = Vec::with_capacity(split.s as usize + 1);
    powers.push(mod_pow(b, &split.d, n)?);
    for j in 0..split.s as usize {
        let sq = &(&powers[j] * &powers[j]) % n;
        powers.push(sq);
    }

    let failing_condition = if !powers[split.s as usize].is_one() {
        Some(FailingCondition::FermatFail)
    } else {
        (1..=split.s).find_map(|i| {
            let residue = &powers[(split.s - i) as usize];
            // (r - 1) mod n kept as a residue; r = 1 maps to 0 and gcd(0, n) = n
            let shifted = &(residue + &n_minus_1) % n;
            let g = gcd(&shifted, n);
            (!g.is_one() && g != *n).then_some(FailingCondition::GcdSplit { i })
        })
    };

    Ok(WitnessEvaluation {
        n: n.clone(),
        b: b.clone(),
        failing_condition,
    })
}

/// Exact fraction `witnesses / candidates` of `b in [1, n)` that are witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WitnessDensity {
    pub witnesses: u64,
    pub candidates: u64,
}

impl WitnessDensity {
    /// Exact comparison against `num / den` (`den > 0`).
    pub fn cmp_fraction(&self, num: u64, den: u64) -> Ordering {
        let lhs = u128::from(self.witnesses) * u128::from(den);
        let rhs = u128::from(num) * u128::from(self.candidates);
        lhs.cmp(&rhs)
    }

    pub fn at_least(&self, num: u64, den: u64) -> bool {
        self.cmp_fraction(num, den) != Ordering::Less
    }

    /// The fraction in lowest terms.
    pub fn reduced(&self) -> (u64, u64) {
        let g = gcd_u64(self.witnesses, self.candidates).max(1);
        (self.witnesses / g, self.candidates / g)
    }
}

impl fmt::Display for WitnessDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.witnesses, self.candidates)
    }
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Counts witnesses over every `b in [1, n)`, with the default cap.
pub fn witness_density(n: &Natural) -> Result<WitnessDensity> {
    witness_density_capped(n, DEFAULT_ENUMERATION_CAP)
}

pub fn witness_density_capped(n: &Natural, cap: u64) -> Result<WitnessDensity> {
    let value = match n.to_u64() {
        Some(v) if v <= cap => v,
        _ => {
            return Err(Error::ResourceLimit {
                what: "witness_density input",
                limit: cap,
            })
        }
    };
    if value < 5 {
        return Err(Error::domain(alloc::format!(
            "witness_density: n = {value} must be at least 5"
        )));
    }
    let mut witnesses = 0;
    for b in 1..value {
        if eval_witness(n, &Natural::from(b))?.outcome() == WitnessOutcome::Composite {
            witnesses += 1;
        }
    }
    Ok(WitnessDensity {
        witnesses,
        candidates: value - 1,
    })
}
