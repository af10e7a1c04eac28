//! Exact rational scalars and their textual form.
//!
//! Every time, density value and path height in this crate is a
//! [`Rational`]. On disk rationals are strings `"p/q"`; the parser also
//! accepts plain integers and finite decimals (`"0.35"`, `"-2"`).

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational number used throughout the crate.
pub type Rational = Ratio<i128>;

/// Shorthand for `p/q`.
pub fn rat(p: i128, q: i128) -> Rational {
    Rational::new(p, q)
}

/// Integer rational.
pub fn int(p: i128) -> Rational {
    Rational::from_integer(p)
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-0.125"`.
pub fn parse_rational(text: &str) -> Result<Rational, Error> {
    let s = text.trim();
    let bad = || Error::Parse(format!("not a rational: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let p: i128 = num.trim().parse().map_err(|_| bad())?;
        let q: i128 = den.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(Error::Parse(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() && whole_digits.is_empty() {
            return Err(bad());
        }
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.len() > 30 {
            return Err(bad());
        }
        let w: i128 = if whole_digits.is_empty() {
            0
        } else {
            whole_digits.parse().map_err(|_| bad())?
        };
        let f: i128 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let scale = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let magnitude = Rational::new(
            w.checked_mul(scale)
                .and_then(|x| x.checked_add(f))
                .ok_or_else(bad)?,
            scale,
        );
        return Ok(if negative { -magnitude } else { magnitude });
    }
    let p: i128 = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Canonical `"p/q"` form (the denominator is always written).
pub fn format_rational(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Nearest `f64`.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| *x.numer() as f64 / *x.denom() as f64)
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    x - x.floor()
}

/// `floor` as an integer.
pub fn floor_int(x: &Rational) -> i128 {
    x.floor().to_integer()
}

/// `ceil` as an integer.
pub fn ceil_int(x: &Rational) -> i128 {
    x.ceil().to_integer()
}

pub(crate) fn half() -> Rational {
    Rational::new(1, 2)
}

pub(crate) fn min_r(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub(crate) fn max_r(a: Rational, b: Rational) -> Rational {
    if a >= b {
        a
    } else {
        b
    }
}

/// Least common multiple of the denominators of `xs` (1 for an empty list).
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> i128 {
    xs.into_iter().fold(1i128, |acc, x| acc.lcm(x.denom()))
}

pub(crate) fn is_integer(x: &Rational) -> bool {
    x.denom().is_one()
}

pub(crate) fn abs(x: &Rational) -> Rational {
    x.abs()
}

pub(crate) fn zero() -> Rational {
    Rational::zero()
}

pub(crate) fn one() -> Rational {
    Rational::one()
}

/// Exact conversion of an `f64` that is known to be a dyadic rational.
pub fn from_f64_exact(x: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    Rational::approximate_float(x).filter(|r| to_f64(r) == x)
}

/// Serde adapter writing a [`Rational`] as `"p/q"` and reading any form
/// accepted by [`parse_rational`].
pub mod as_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = RawRational::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(crate) enum RawRational {
        Text(String),
        Int(i64),
        Float(f64),
    }

    impl RawRational {
        pub(crate) fn parse(&self) -> Result<Rational, crate::error::Error> {
            match self {
                RawRational::Text(t) => parse_rational(t),
                RawRational::Int(i) => Ok(Rational::from_integer(*i as i128)),
                // Shortest round-trip decimal of the float, read exactly.
                RawRational::Float(f) => parse_rational(&format!("{f}")),
            }
        }
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod vec_as_str {
    use super::{as_str::RawRational, format_rational, Rational};
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_rational(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<RawRational>::deserialize(d)?
            .iter()
            .map(|r| r.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for `Option<Rational>` (`null` when absent).
pub mod opt_as_str {
    use super::{format_rational, Rational};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format_rational(x)),
            None => s.serialize_none(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational(" -6/8 ").unwrap(), rat(-3, 4));
        assert_eq!(parse_rational("2").unwrap(), int(2));
        assert_eq!(parse_rational("0.35").unwrap(), rat(7, 20));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational(".5").unwrap(), half());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("0.1e3").is_err());
    }

    #[test]
    fn format_always_writes_denominator() {
        assert_eq!(format_rational(&int(3)), "3/1");
        assert_eq!(format_rational(&rat(-2, 6)), "-1/3");
    }

    #[test]
    fn frac_is_in_unit_interval() {
        assert_eq!(frac(&rat(-1, 4)), rat(3, 4));
        assert_eq!(frac(&rat(7, 4)), rat(3, 4));
        assert_eq!(frac(&int(2)), zero());
    }
}
