//! Numeric literals accepted on the command line.

use prime_evidence_core::Natural;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid {what} {text:?}: {reason}")]
pub struct LiteralError {
    what: &'static str,
    text: String,
    reason: &'static str,
}

fn err(what: &'static str, text: &str, reason: &'static str) -> LiteralError {
    LiteralError {
        what,
        text: text.to_owned(),
        reason,
    }
}

/// Digit strings with leading zeros tolerated.
fn digits(s: &str) -> Option<Natural> {
    if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let trimmed = s.trim_start_matches('0');
    Natural::parse_canonical(if trimmed.is_empty() { "0" } else { trimmed }).ok()
}

fn pow10(exp: u64) -> Natural {
    (0..exp).fold(Natural::one(), |acc, _| &acc * 10)
}

/// `2^p-1` with `p` in decimal; returns `p`.
fn mersenne_exponent(text: &str) -> Option<u64> {
    text.strip_prefix("2^")?
        .strip_suffix("-1")
        .and_then(digits)
        .and_then(|p| p.to_u64())
}

/// A decimal literal or the form `2^p-1`.
pub fn parse_natural(text: &str) -> Result<Natural, LiteralError> {
    let text = text.trim();
    if let Some(p) = mersenne_exponent(text) {
        return Ok(Natural::mersenne(p));
    }
    digits(text).ok_or_else(|| err("integer", text, "expected decimal digits or 2^p-1"))
}

/// A Mersenne exponent, given either as `p` or as `2^p-1`.
pub fn parse_exponent(text: &str) -> Result<u64, LiteralError> {
    let text = text.trim();
    mersenne_exponent(text)
        .or_else(|| digits(text).and_then(|p| p.to_u64()))
        .ok_or_else(|| err("exponent", text, "expected p or 2^p-1 with p < 2^64"))
}

/// An error threshold as an exact fraction `(numerator, denominator)`.
///
/// Accepts `a/b`, decimals and scientific notation (`0.001`, `1e-9`,
/// `2.5E-3`), and negative powers `b^-e` (`4^-10`).
pub fn parse_epsilon(text: &str) -> Result<(Natural, Natural), LiteralError> {
    const WHAT: &str = "epsilon";
    let text = text.trim();

    if let Some((num, den)) = text.split_once('/') {
        let num = digits(num.trim()).ok_or_else(|| err(WHAT, text, "bad numerator"))?;
        let den = digits(den.trim()).ok_or_else(|| err(WHAT, text, "bad denominator"))?;
        if den.is_zero() {
            return Err(err(WHAT, text, "zero denominator"));
        }
        return Ok((num, den));
    }

    if let Some((base, exp)) = text.split_once("^-") {
        let base = digits(base).ok_or_else(|| err(WHAT, text, "bad base"))?;
        let exp = digits(exp)
            .and_then(|e| e.to_u64())
            .ok_or_else(|| err(WHAT, text, "bad exponent"))?;
        let den = (0..exp).fold(Natural::one(), |acc, _| &acc * &base);
        return Ok((Natural::one(), den));
    }

    let (mantissa, exponent) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], &text[pos + 1..]),
        None => (text, "0"),
    };
    let (sign, exp_digits) = match exponent.as_bytes().first() {
        Some(b'-') => (-1i64, &exponent[1..]),
        Some(b'+') => (1, &exponent[1..]),
        _ => (1, exponent),
    };
    let exp = digits(exp_digits)
        .and_then(|e| e.to_u64())
        .and_then(|e| i64::try_from(e).ok())
        .ok_or_else(|| err(WHAT, text, "bad exponent"))?
        * sign;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err(WHAT, text, "missing digits"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let value = digits(&all_digits).ok_or_else(|| err(WHAT, text, "not a number"))?;
    let scale = exp - frac_part.len() as i64;
    if scale >= 0 {
        Ok((&value * &pow10(scale as u64), Natural::one()))
    } else {
        Ok((value, pow10(scale.unsigned_abs())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> Natural {
        Natural::from(v)
    }

    #[test]
    fn naturals() {
        assert_eq!(parse_natural("97").unwrap(), n(97));
        assert_eq!(parse_natural("2^5-1").unwrap(), n(31));
        assert_eq!(parse_natural("2^127-1").unwrap(), Natural::mersenne(127));
        assert!(parse_natural("-3").is_err());
        assert!(parse_natural("2^5+1").is_err());
        assert!(parse_natural("").is_err());
    }

    #[test]
    fn exponents() {
        assert_eq!(parse_exponent("31").unwrap(), 31);
        assert_eq!(parse_exponent("2^31-1").unwrap(), 31);
        assert!(parse_exponent("x").is_err());
    }

    #[test]
    fn epsilons() {
        let e = |s: &str| parse_epsilon(s).unwrap();
        assert_eq!(e("1/4"), (n(1), n(4)));
        assert_eq!(e("1e-9"), (n(1), n(1_000_000_000)));
        assert_eq!(e("0.25"), (n(25), n(100)));
        assert_eq!(e("2.5E-3"), (n(25), n(10_000)));
        assert_eq!(e("4^-10"), (n(1), n(1_048_576)));
        assert_eq!(e("1e+2"), (n(100), n(1)));
        assert_eq!(e(".5"), (n(5), n(10)));
        for bad in ["", "abc", "1/0", "1e", "e-3", "1/x", "1.2.3"] {
            assert!(parse_epsilon(bad).is_err(), "{bad}");
        }
    }
}
