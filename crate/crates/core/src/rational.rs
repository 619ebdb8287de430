//! Exact rational helpers and the `[0,1]` parameter carrier used for the
//! confidence parameter and lottery weights.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn from_int(v: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(v.into())
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Renders a rational as `p/q`, or `p` when the denominator is one.
pub fn render(r: &BigRational) -> String {
    r.to_string()
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let parsed = if t.contains('/') {
        BigRational::from_str(t).ok()
    } else {
        BigInt::from_str(t).ok().map(BigRational::from_integer)
    };
    parsed.ok_or_else(|| Error::invalid(format!("cannot parse rational '{s}' (expected p/q)")))
}

/// `base^exp` for a non-negative integer exponent; `0^0 = 1`.
pub fn pow(base: &BigRational, exp: usize) -> BigRational {
    let exp = u32::try_from(exp).expect("exponent fits in u32");
    // A reduced fraction stays reduced under powers.
    BigRational::new_raw(base.numer().pow(exp), base.denom().pow(exp))
}

pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// A reduced rational in `[0,1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalParam(BigRational);

impl RationalParam {
    pub fn new(value: BigRational) -> Result<Self> {
        if value.is_negative() || value > BigRational::one() {
            return Err(Error::invalid(format!("{value} is outside [0,1]")));
        }
        Ok(Self(value))
    }

    pub fn from_ratio(numer: i64, denom: i64) -> Result<Self> {
        if denom <= 0 {
            return Err(Error::invalid("denominator must be positive"));
        }
        Self::new(ratio(numer, denom))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn complement(&self) -> BigRational {
        BigRational::one() - &self.0
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.0)
    }
}

impl fmt::Display for RationalParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for RationalParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_rational(s)?)
    }
}

impl Serialize for RationalParam {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&render(&self.0))
    }
}

impl<'de> Deserialize<'de> for RationalParam {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for bare `BigRational` fields rendered as `"p/q"` strings.
pub mod as_string {
    use super::*;

    pub fn serialize<S: Serializer>(
        r: &BigRational,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&render(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reduces() {
        let r: RationalParam = "4/6".parse().unwrap();
        assert_eq!(r.value(), &ratio(2, 3));
        assert_eq!(r.to_string(), "2/3");
        assert_eq!("1".parse::<RationalParam>().unwrap(), RationalParam::one());
    }

    #[test]
    fn rejects_out_of_range() {
        assert!("3/2".parse::<RationalParam>().is_err());
        assert!("-1/2".parse::<RationalParam>().is_err());
        assert!("x".parse::<RationalParam>().is_err());
        assert!(RationalParam::from_ratio(1, 0).is_err());
    }

    #[test]
    fn pow_and_binomial() {
        assert_eq!(pow(&ratio(2, 3), 3), ratio(8, 27));
        assert_eq!(pow(&BigRational::zero(), 0), BigRational::one());
        assert_eq!(binomial(5, 2), BigInt::from(10));
        assert_eq!(binomial(2, 5), BigInt::zero());
    }

    #[test]
    fn serde_as_string() {
        let r = RationalParam::from_ratio(1, 3).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, "\"1/3\"");
        let back: RationalParam = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
