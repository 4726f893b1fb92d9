//! Exact rational scalars and their canonical string form.
//!
//! Every numeric quantity in the crate is a [`Rational`]. The text form is
//! `"num/den"` with a positive, coprime denominator, or a bare integer when
//! the denominator is one. A leading `-` is the only sign accepted.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("rational `{0}` has a zero denominator")]
    ZeroDenominator(String),
    #[error("rational `{0}` has a non-canonical sign (only a single leading `-` is allowed)")]
    NonCanonicalSign(String),
    #[error("rational `{0}` is not of the form `num/den` or an integer")]
    Malformed(String),
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"p/q"` or `"p"`. The denominator may not carry a sign and may not be
/// zero; `+` prefixes and `--` are rejected. The value is reduced.
pub fn parse(text: &str) -> Result<Rational, ParseRationalError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (text, None),
    };
    let num = parse_integer(num, true, text)?;
    let den = match den {
        Some(d) => parse_integer(d, false, text)?,
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(text.to_owned()));
    }
    Ok(Rational::new(num, den))
}

fn parse_integer(part: &str, signed: bool, whole: &str) -> Result<BigInt, ParseRationalError> {
    let digits = match part.strip_prefix('-') {
        Some(rest) if signed => rest,
        Some(_) => return Err(ParseRationalError::NonCanonicalSign(whole.to_owned())),
        None => part,
    };
    if digits.starts_with('+') || digits.starts_with('-') {
        return Err(ParseRationalError::NonCanonicalSign(whole.to_owned()));
    }
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseRationalError::Malformed(whole.to_owned()));
    }
    let value: BigInt = digits
        .parse()
        .map_err(|_| ParseRationalError::Malformed(whole.to_owned()))?;
    Ok(if part.starts_with('-') { -value } else { value })
}

/// Canonical `num/den` text (integers print without a denominator).
pub fn format(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Rounded decimal with `places` fractional digits (half away from zero).
/// Display only; never feeds back into a computation.
pub fn to_decimal(value: &Rational, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = value * Rational::from_integer(scale.clone());
    let rounded = scaled.round().to_integer();
    let negative = rounded.is_negative();
    let digits = rounded.abs().to_string();
    let body = if places == 0 {
        digits
    } else {
        let padded = format!("{:0>width$}", digits, width = places + 1);
        let (whole, frac) = padded.split_at(padded.len() - places);
        format!("{whole}.{frac}")
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn positive_part(value: &Rational) -> Rational {
    if value.is_positive() {
        value.clone()
    } else {
        Rational::zero()
    }
}

pub fn negative_part(value: &Rational) -> Rational {
    if value.is_negative() {
        -value
    } else {
        Rational::zero()
    }
}

/// Serde adapter storing a rational as its canonical string.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalText(pub Rational);

impl fmt::Display for RationalText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format(&self.0))
    }
}

impl Serialize for RationalText {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format(&self.0))
    }
}

impl<'de> Deserialize<'de> for RationalText {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        parse(&text).map(RationalText).map_err(serde::de::Error::custom)
    }
}

impl From<Rational> for RationalText {
    fn from(value: Rational) -> Self {
        RationalText(value)
    }
}
