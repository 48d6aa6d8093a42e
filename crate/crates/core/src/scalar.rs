//! Scalar types used for time values.
//!
//! Every time-carrying structure in this crate is generic over [`TimeScalar`].
//! The exact instantiation ([`Rational64`]) is what the manifest, aligner and
//! simulator use; `f64`/`f32` instantiations are available for evaluating
//! timelines that come from floating-point sources such as VAD output.

use std::fmt::Debug;

use num_rational::Rational64;
use num_traits::{Num, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact seconds.
pub type Seconds = Rational64;

/// Maximum number of fractional digits accepted when reading decimal seconds.
pub const MAX_FRACTION_DIGITS: usize = 9;

pub trait TimeScalar: Num + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_rational(r: Rational64) -> Self {
        Self::from_ratio(*r.numer(), *r.denom())
    }

    fn from_count(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    fn to_f64(self) -> f64;

    /// `floor(self * rate)`.
    fn floor_scaled(self, rate: Rational64) -> i64;

    /// `ceil(self * rate)`.
    fn ceil_scaled(self, rate: Rational64) -> i64;

    fn is_negative(self) -> bool {
        self < Self::zero()
    }
}

impl TimeScalar for Rational64 {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        Rational64::new(numer, denom)
    }

    fn to_f64(self) -> f64 {
        // Go through the exact decimal expansion when there is one so the
        // resulting float is the correctly rounded value of that decimal.
        match format_decimal(self) {
            Some(s) => s.parse().unwrap_or(f64::NAN),
            None => ToPrimitive::to_f64(&self).unwrap_or(f64::NAN),
        }
    }

    fn floor_scaled(self, rate: Rational64) -> i64 {
        (self * rate).floor().to_integer()
    }

    fn ceil_scaled(self, rate: Rational64) -> i64 {
        (self * rate).ceil().to_integer()
    }
}

impl TimeScalar for f64 {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn floor_scaled(self, rate: Rational64) -> i64 {
        (self * *rate.numer() as f64 / *rate.denom() as f64).floor() as i64
    }

    fn ceil_scaled(self, rate: Rational64) -> i64 {
        (self * *rate.numer() as f64 / *rate.denom() as f64).ceil() as i64
    }
}

impl TimeScalar for f32 {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        (numer as f64 / denom as f64) as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn floor_scaled(self, rate: Rational64) -> i64 {
        (self as f64 * *rate.numer() as f64 / *rate.denom() as f64).floor() as i64
    }

    fn ceil_scaled(self, rate: Rational64) -> i64 {
        (self as f64 * *rate.numer() as f64 / *rate.denom() as f64).ceil() as i64
    }
}

pub fn tmin<T: TimeScalar>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

pub fn tmax<T: TimeScalar>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

/// Exact seconds from whole milliseconds.
pub fn millis(ms: i64) -> Rational64 {
    Rational64::new(ms, 1000)
}

/// Parses a plain decimal literal (`"3.84"`, `"-0.5"`, `"12"`) into an exact rational.
pub fn parse_decimal(text: &str) -> Result<Rational64> {
    let s = text.trim();
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let digits_ok = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if (int_part.is_empty() && frac_part.is_empty())
        || !digits_ok(int_part)
        || !digits_ok(frac_part)
    {
        return Err(Error::InvalidTime(format!(
            "not a decimal number: {text:?}"
        )));
    }
    let frac_part = frac_part.trim_end_matches('0');
    if frac_part.len() > MAX_FRACTION_DIGITS {
        return Err(Error::InvalidTime(format!(
            "{text:?} has more than {MAX_FRACTION_DIGITS} fractional digits"
        )));
    }
    let denom = 10i64.pow(frac_part.len() as u32);
    let overflow = || Error::InvalidTime(format!("{text:?} is out of range"));
    let int_value: i64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| overflow())?
    };
    let frac_value: i64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| overflow())?
    };
    let numer = int_value
        .checked_mul(denom)
        .and_then(|v| v.checked_add(frac_value))
        .ok_or_else(overflow)?;
    let value = Rational64::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// Exact seconds from a JSON float.
///
/// The float's shortest round-trip representation is taken as the intended
/// decimal, so `3.84` becomes exactly `96/25`.
pub fn seconds_from_f64(x: f64) -> Result<Rational64> {
    if !x.is_finite() {
        return Err(Error::InvalidTime(format!("non-finite value {x}")));
    }
    parse_decimal(&format!("{x}"))
}

/// Exact decimal expansion of `r`, or `None` when it does not terminate.
pub fn format_decimal(r: Rational64) -> Option<String> {
    let mut denom = *r.denom();
    let (mut twos, mut fives) = (0u32, 0u32);
    while denom % 2 == 0 {
        denom /= 2;
        twos += 1;
    }
    while denom % 5 == 0 {
        denom /= 5;
        fives += 1;
    }
    if denom != 1 {
        return None;
    }
    let places = twos.max(fives);
    let scale = 10i128.checked_pow(places)?;
    let scaled = *r.numer() as i128 * (scale / *r.denom() as i128);
    let sign = if scaled < 0 { "-" } else { "" };
    let abs = scaled.unsigned_abs();
    let scale = scale as u128;
    let int_part = abs / scale;
    if places == 0 {
        return Some(format!("{sign}{int_part}"));
    }
    let frac = abs % scale;
    Some(format!(
        "{sign}{int_part}.{frac:0width$}",
        width = places as usize
    ))
}

/// Rounds an exact value to the nearest nanosecond (ties away from zero).
pub fn round_to_nanos(r: Rational64) -> Rational64 {
    let scaled = r * Rational64::from_integer(1_000_000_000);
    let rounded = if scaled.is_negative() {
        -((-scaled) + Rational64::new(1, 2)).floor()
    } else {
        (scaled + Rational64::new(1, 2)).floor()
    };
    if rounded.is_zero() {
        return Rational64::zero();
    }
    rounded / Rational64::from_integer(1_000_000_000)
}

/// Float used when writing an exact time to JSON.
///
/// Non-terminating values (possible only after division) are rounded to the
/// nearest nanosecond first.
pub fn seconds_to_f64(r: Rational64) -> f64 {
    let r = if format_decimal(r).is_some() {
        r
    } else {
        round_to_nanos(r)
    };
    TimeScalar::to_f64(r)
}

pub(crate) fn seconds_display<T: TimeScalar>(t: T) -> String {
    format!("{}", t.to_f64())
}

pub(crate) fn check_non_negative<T: TimeScalar>(t: T, what: &str) -> Result<()> {
    if t.is_negative() {
        return Err(Error::InvalidParameter(format!(
            "{what} must be >= 0, got {}",
            seconds_display(t)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_decimal("3.84").unwrap(), Rational64::new(96, 25));
        assert_eq!(parse_decimal("0.64").unwrap(), Rational64::new(16, 25));
        assert_eq!(parse_decimal("12").unwrap(), Rational64::from_integer(12));
        assert_eq!(parse_decimal("-0.5").unwrap(), Rational64::new(-1, 2));
        assert_eq!(parse_decimal(".25").unwrap(), Rational64::new(1, 4));
        assert_eq!(parse_decimal("1.500").unwrap(), Rational64::new(3, 2));
        assert!(parse_decimal("1e3").is_err());
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("0.0000000001").is_err());
    }

    #[test]
    fn float_inputs_keep_their_decimal() {
        assert_eq!(seconds_from_f64(3.84).unwrap(), Rational64::new(96, 25));
        assert_eq!(seconds_from_f64(0.079).unwrap(), Rational64::new(79, 1000));
        assert_eq!(
            seconds_from_f64(0.3205).unwrap(),
            Rational64::new(641, 2000)
        );
        assert!(seconds_from_f64(f64::NAN).is_err());
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(format_decimal(Rational64::new(96, 25)).unwrap(), "3.84");
        assert_eq!(format_decimal(Rational64::new(-1, 8)).unwrap(), "-0.125");
        assert_eq!(format_decimal(Rational64::from_integer(7)).unwrap(), "7");
        assert!(format_decimal(Rational64::new(1, 3)).is_none());
        assert_eq!(seconds_to_f64(Rational64::new(96, 25)), 3.84);
        assert_eq!(seconds_to_f64(Rational64::new(1, 3)), 0.333333333);
    }

    #[test]
    fn scaled_rounding() {
        let fps = Rational64::new(25, 2);
        assert_eq!(Rational64::new(96, 25).floor_scaled(fps), 48);
        assert_eq!(Rational64::new(79, 1000).floor_scaled(fps), 0);
        assert_eq!(Rational64::new(79, 1000).ceil_scaled(fps), 1);
        assert_eq!(3.5f64.floor_scaled(fps), 43);
        assert_eq!(3.5f32.ceil_scaled(fps), 44);
    }
}
