//! Exact rational edge weights.
//!
//! All weight arithmetic in this crate is exact: weights are ratios of
//! machine integers, never floats. The approximation bounds we maintain
//! ((1-4eps), (1+4eps), ...) are checked with equality-grade comparisons,
//! so any drift would show up as a hard test failure rather than a flaky
//! tolerance.

use num::rational::Ratio;
pub use num::{One, Signed, Zero};
use std::str::FromStr;

/// Exact rational number backing every weight and bound in the crate.
pub type Rat = Ratio<i128>;

/// Shorthand for an integer-valued rational.
pub fn rat(n: i128) -> Rat {
    Ratio::from_integer(n)
}

/// Shorthand for `n/d`.
pub fn ratio(n: i128, d: i128) -> Rat {
    Ratio::new(n, d)
}

/// Errors from parsing textual weights.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WeightParseError {
    #[error("empty weight field")]
    Empty,
    #[error("malformed weight `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses a weight written either as a decimal (`1.5`, `300`, `-0.25`) or as
/// an explicit fraction (`3/2`). This is the inverse of [`format_rat`]: every
/// string produced there parses back to the identical rational.
pub fn parse_rat(s: &str) -> Result<Rat, WeightParseError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(WeightParseError::Empty);
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = i128::from_str(n.trim()).map_err(|_| WeightParseError::Malformed(s.into()))?;
        let d = i128::from_str(d.trim()).map_err(|_| WeightParseError::Malformed(s.into()))?;
        if d == 0 {
            return Err(WeightParseError::ZeroDenominator(s.into()));
        }
        return Ok(Ratio::new(n, d));
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if frac_part.is_empty() {
        let n = i128::from_str(int_part).map_err(|_| WeightParseError::Malformed(s.into()))?;
        return Ok(rat(n));
    }
    if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(WeightParseError::Malformed(s.into()));
    }
    let negative = int_part.starts_with('-');
    let int_val = if int_part.is_empty() || int_part == "-" {
        0
    } else {
        i128::from_str(int_part).map_err(|_| WeightParseError::Malformed(s.into()))?
    };
    let scale = 10i128
        .checked_pow(frac_part.len() as u32)
        .ok_or_else(|| WeightParseError::Malformed(s.into()))?;
    let frac_val = i128::from_str(frac_part).map_err(|_| WeightParseError::Malformed(s.into()))?;
    let magnitude = Ratio::from_integer(int_val.abs()) + Ratio::new(frac_val, scale);
    Ok(if negative { -magnitude } else { magnitude })
}

/// Formats a rational so that `parse_rat(format_rat(x)) == x` bit-exactly.
///
/// Values whose reduced denominator is of the form `2^a * 5^b` are written
/// as terminating decimals (the trace format's preferred shape); everything
/// else falls back to `n/d`.
pub fn format_rat(x: &Rat) -> String {
    let denom = *x.denom();
    if denom == 1 {
        return x.numer().to_string();
    }
    let mut d = denom;
    let mut twos = 0u32;
    let mut fives = 0u32;
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return format!("{}/{}", x.numer(), x.denom());
    }
    let digits = twos.max(fives);
    let scale = 10i128.pow(digits);
    // scale/denom is integral by construction
    let scaled = x.numer() * (scale / denom);
    let sign = if scaled < 0 { "-" } else { "" };
    let mag = scaled.abs();
    let int_part = mag / scale;
    let frac_part = mag % scale;
    format!(
        "{sign}{int_part}.{frac:0>width$}",
        frac = frac_part,
        width = digits as usize
    )
}

/// Floor of log base `b` of `x`, computed with exact comparisons.
/// Requires `x > 0` and `b > 1`. Returns the unique `k` with
/// `b^k <= x < b^(k+1)`.
pub fn floor_log(x: &Rat, b: &Rat) -> i64 {
    assert!(x.is_positive(), "floor_log of non-positive value");
    assert!(*b > Rat::one(), "floor_log base must exceed 1");
    let mut k: i64 = 0;
    let mut pow = Rat::one();
    if *x >= Rat::one() {
        // grow until pow * b > x
        loop {
            let next = pow * b;
            if next > *x {
                return k;
            }
            pow = next;
            k += 1;
        }
    } else {
        // shrink until pow <= x
        loop {
            pow /= b;
            k -= 1;
            if pow <= *x {
                return k;
            }
        }
    }
}

/// `b^k` for integer (possibly negative) `k`.
pub fn rat_pow(b: &Rat, k: i64) -> Rat {
    let mut acc = Rat::one();
    let mag = k.unsigned_abs();
    for _ in 0..mag {
        acc *= b;
    }
    if k < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// Ceiling of a rational as an integer.
pub fn ceil_int(x: &Rat) -> i128 {
    x.ceil().to_integer()
}

/// Floor of a rational as an integer.
pub fn floor_int(x: &Rat) -> i128 {
    x.floor().to_integer()
}

/// Nearest integer, ties away from zero.
pub fn round_int(x: &Rat) -> i128 {
    x.round().to_integer()
}

/// True if `x` is an integer.
pub fn is_integer(x: &Rat) -> bool {
    *x.denom() == 1
}

/// Lossy conversion for places where only a rough magnitude matters
/// (interval midpoints); never used in any bound check.
pub fn rat_to_f64(x: &Rat) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_decimal_forms() {
        assert_eq!(parse_rat("1.5").unwrap(), ratio(3, 2));
        assert_eq!(parse_rat("300").unwrap(), rat(300));
        assert_eq!(parse_rat("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rat(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rat("-2.25").unwrap(), ratio(-9, 4));
        assert_eq!(parse_rat("7/3").unwrap(), ratio(7, 3));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_rat("").is_err());
        assert!(parse_rat("1.2.3").is_err());
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat("1.x").is_err());
    }

    #[test]
    fn format_decimal_when_terminating() {
        assert_eq!(format_rat(&ratio(3, 2)), "1.5");
        assert_eq!(format_rat(&rat(42)), "42");
        assert_eq!(format_rat(&ratio(1, 8)), "0.125");
        assert_eq!(format_rat(&ratio(-1, 4)), "-0.25");
        assert_eq!(format_rat(&ratio(1, 3)), "1/3");
    }

    #[test]
    fn round_trip_exact() {
        let samples = [
            ratio(3, 2),
            ratio(1, 3),
            rat(0),
            rat(-17),
            ratio(22, 7),
            ratio(1079, 5),
            ratio(1, 1024),
        ];
        for x in samples {
            assert_eq!(parse_rat(&format_rat(&x)).unwrap(), x, "{x}");
        }
    }

    #[test]
    fn floor_log_boundaries() {
        let ten = rat(10);
        assert_eq!(floor_log(&rat(1), &ten), 0);
        assert_eq!(floor_log(&rat(9), &ten), 0);
        assert_eq!(floor_log(&rat(10), &ten), 1);
        assert_eq!(floor_log(&rat(1_000_000), &ten), 6);
        assert_eq!(floor_log(&ratio(1, 10), &ten), -1);
        assert_eq!(floor_log(&ratio(99, 1000), &ten), -2);
        let three_halves = ratio(3, 2);
        assert_eq!(floor_log(&ratio(9, 4), &three_halves), 2);
    }

    #[test]
    fn rat_pow_negative() {
        assert_eq!(rat_pow(&rat(10), -2), ratio(1, 100));
        assert_eq!(rat_pow(&ratio(3, 2), 3), ratio(27, 8));
        assert_eq!(rat_pow(&rat(7), 0), rat(1));
    }
}
