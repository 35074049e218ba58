//! Arbitrary-magnitude natural numbers and the three primitives every tester
//! leans on: modular exponentiation, gcd, and the two-adic split `m = 2^s * d`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Rem, Shl, Shr};
use core::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A nonnegative integer of unbounded size.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Natural(BigUint);

impl Natural {
    pub fn zero() -> Self {
        Natural(BigUint::zero())
    }

    pub fn one() -> Self {
        Natural(BigUint::one())
    }

    /// `2^exp`.
    pub fn power_of_two(exp: u64) -> Self {
        Natural(BigUint::one() << exp)
    }

    /// The Mersenne number `2^p - 1`.
    pub fn mersenne(p: u64) -> Self {
        Natural((BigUint::one() << p) - 1u32)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_odd(&self) -> bool {
        self.0.bit(0)
    }

    pub fn is_even(&self) -> bool {
        !self.is_odd()
    }

    /// Number of significant bits; zero has bit length 0.
    pub fn bit_length(&self) -> u64 {
        self.0.bits()
    }

    /// Bit `index`, counting from the least significant bit.
    pub fn bit(&self, index: u64) -> bool {
        self.0.bit(index)
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }

    /// `self - rhs`, or `None` when the result would be negative.
    pub fn checked_sub(&self, rhs: &Natural) -> Option<Natural> {
        if self.0 < rhs.0 {
            None
        } else {
            Some(Natural(&self.0 - &rhs.0))
        }
    }

    /// Quotient and remainder, or `None` for a zero divisor.
    pub fn div_rem(&self, divisor: &Natural) -> Option<(Natural, Natural)> {
        if divisor.is_zero() {
            return None;
        }
        Some((Natural(&self.0 / &divisor.0), Natural(&self.0 % &divisor.0)))
    }

    /// Builds a natural from bits given most-significant first.
    pub fn from_bits_msb_first(bits: &[bool]) -> Natural {
        let mut bytes = Vec::with_capacity(bits.len().div_ceil(8));
        // left-pad to a whole number of bytes
        let pad = (8 - bits.len() % 8) % 8;
        let mut acc = 0u8;
        for (i, &bit) in core::iter::repeat_n(&false, pad).chain(bits).enumerate() {
            acc = (acc << 1) | u8::from(bit);
            if i % 8 == 7 {
                bytes.push(acc);
                acc = 0;
            }
        }
        Natural(BigUint::from_bytes_be(&bytes))
    }

    /// Parses the canonical decimal form: ASCII digits only, no sign, no
    /// leading zeros except for `"0"` itself.
    pub fn parse_canonical(text: &str) -> Result<Natural, ParseNaturalError> {
        let bytes = text.as_bytes();
        if bytes.is_empty() {
            return Err(ParseNaturalError::Empty);
        }
        if let Some(pos) = bytes.iter().position(|c| !c.is_ascii_digit()) {
            return Err(ParseNaturalError::InvalidDigit(pos));
        }
        if bytes.len() > 1 && bytes[0] == b'0' {
            return Err(ParseNaturalError::LeadingZero);
        }
        BigUint::parse_bytes(bytes, 10)
            .map(Natural)
            .ok_or(ParseNaturalError::Empty)
    }

    /// Canonical decimal string.
    pub fn to_decimal(&self) -> String {
        self.0.to_str_radix(10)
    }

    /// `self mod (2^p - 1)` via shift-and-add folding.
    pub(crate) fn rem_mersenne(&self, p: u64, modulus: &Natural) -> Natural {
        let mut x = self.0.clone();
        while x.bits() > p {
            x = (&x & &modulus.0) + (&x >> p);
        }
        if x == modulus.0 {
            x.set_zero();
        }
        Natural(x)
    }
}

impl fmt::Display for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Debug for Natural {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Natural({})", self.0)
    }
}

impl From<u64> for Natural {
    fn from(v: u64) -> Self {
        Natural(BigUint::from(v))
    }
}

impl From<u32> for Natural {
    fn from(v: u32) -> Self {
        Natural(BigUint::from(v))
    }
}

impl From<BigUint> for Natural {
    fn from(v: BigUint) -> Self {
        Natural(v)
    }
}

impl From<Natural> for BigUint {
    fn from(v: Natural) -> Self {
        v.0
    }
}

impl FromStr for Natural {
    type Err = ParseNaturalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Natural::parse_canonical(s)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Natural> for &Natural {
            type Output = Natural;
            fn $method(self, rhs: &Natural) -> Natural {
                Natural($trait::$method(&self.0, &rhs.0))
            }
        }
        impl $trait<Natural> for Natural {
            type Output = Natural;
            fn $method(self, rhs: Natural) -> Natural {
                Natural($trait::$method(self.0, rhs.0))
            }
        }
        impl $trait<&Natural> for Natural {
            type Output = Natural;
            fn $method(self, rhs: &Natural) -> Natural {
                Natural($trait::$method(self.0, &rhs.0))
            }
        }
        impl $trait<u64> for &Natural {
            type Output = Natural;
            fn $method(self, rhs: u64) -> Natural {
                Natural($trait::$method(&self.0, rhs))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Mul, mul);
// Rem panics on a zero divisor, like the primitive integer types.
forward_binop!(Rem, rem);

impl Shl<u64> for &Natural {
    type Output = Natural;
    fn shl(self, rhs: u64) -> Natural {
        Natural(&self.0 << rhs)
    }
}

impl Shr<u64> for &Natural {
    type Output = Natural;
    fn shr(self, rhs: u64) -> Natural {
        Natural(&self.0 >> rhs)
    }
}

/// Rejection reasons for [`Natural::parse_canonical`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseNaturalError {
    Empty,
    /// Byte offset of the first non-digit.
    InvalidDigit(usize),
    LeadingZero,
}

impl fmt::Display for ParseNaturalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseNaturalError::Empty => f.write_str("empty numeral"),
            ParseNaturalError::InvalidDigit(pos) => {
                write!(f, "invalid decimal digit at offset {pos}")
            }
            ParseNaturalError::LeadingZero => f.write_str("leading zeros are not canonical"),
        }
    }
}

impl core::error::Error for ParseNaturalError {}

/// `m = 2^s * d` with `d` odd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoAdicSplit {
    pub s: u64,
    pub d: Natural,
}

/// `base^exponent mod modulus` by left-to-right binary square-and-multiply.
///
/// A modulus of 1 yields 0, the only residue.
pub fn mod_pow(base: &Natural, exponent: &Natural, modulus: &Natural) -> Result<Natural> {
    if modulus.is_zero() {
        return Err(Error::domain("mod_pow: modulus must be at least 1"));
    }
    let m = &modulus.0;
    let b = &base.0 % m;
    let mut acc = BigUint::one() % m;
    for i in (0..exponent.bit_length()).rev() {
        acc = &acc * &acc % m;
        if exponent.bit(i) {
            acc = acc * &b % m;
        }
    }
    Ok(Natural(acc))
}

/// Greatest common divisor by Euclid's algorithm; `gcd(0, x) = x`.
pub fn gcd(a: &Natural, b: &Natural) -> Natural {
    let (mut x, mut y) = (a.0.clone(), b.0.clone());
    while !y.is_zero() {
        let r = &x % &y;
        x = y;
        y = r;
    }
    Natural(x)
}

/// Splits `m >= 1` into `2^s * d` with `d` odd.
pub fn two_adic_split(m: &Natural) -> Result<TwoAdicSplit> {
    let s = m
        .0
        .trailing_zeros()
        .ok_or_else(|| Error::domain("two_adic_split: input must be at least 1"))?;
    Ok(TwoAdicSplit { s, d: m >> s })
}
