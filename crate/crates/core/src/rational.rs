//! Exact rationals and their textual form.
//!
//! Rationals are written as `"num/den"` in lowest terms (`"9/2"`, `"-3"`);
//! a bare integer is accepted on input.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `"num/den"` or `"num"`, rejecting a zero denominator.
pub fn parse(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| format!("bad numerator in {text:?}"))?;
    let den: BigInt = den.parse().map_err(|_| format!("bad denominator in {text:?}"))?;
    if den.is_zero() {
        return Err(format!("zero denominator in {text:?}"));
    }
    Ok(Rational::new(num, den))
}

pub fn parse_field(field: &str, text: &str) -> Result<Rational> {
    parse(text).map_err(|message| Error::Parse {
        field: field.to_string(),
        message,
    })
}

/// Canonical text: `"num/den"` in lowest terms, integers without a denominator.
pub fn format(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn is_positive(value: &Rational) -> bool {
    value.is_positive()
}

/// Serde adapter for a single rational stored as a string.
pub mod serde_str {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a sequence of rationals stored as strings.
pub mod serde_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse(t).map_err(serde::de::Error::custom))
            .collect()
    }
}
