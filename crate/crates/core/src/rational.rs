//! Exact probabilities.
//!
//! Every weight and probability in the crate is an arbitrary-precision
//! rational. Nothing is ever rounded to floating point.

use num_bigint::BigInt;
use num_traits::{One, Zero};

pub type Ratio = num_rational::BigRational;

pub fn ratio(num: i64, den: i64) -> Ratio {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Ratio {
    Ratio::zero()
}

pub fn one() -> Ratio {
    Ratio::one()
}

/// `"num/den"` in lowest terms, always with an explicit denominator.
pub fn to_fraction_string(r: &Ratio) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `"p/q"` or a bare integer `"p"`.
pub fn parse_ratio(s: &str) -> Option<Ratio> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Ratio::new(n, d))
        }
        None => Some(Ratio::from_integer(s.parse().ok()?)),
    }
}

/// Serde adapter storing a rational as a `"num/den"` string.
pub mod serde_fraction {
    use super::{parse_ratio, to_fraction_string, Ratio};
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Ratio, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_fraction_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Ratio, D::Error> {
        let raw = String::deserialize(d)?;
        parse_ratio(&raw).ok_or_else(|| D::Error::custom(format!("bad rational {raw:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fraction_strings_are_reduced() {
        assert_eq!(to_fraction_string(&ratio(2, 4)), "1/2");
        assert_eq!(to_fraction_string(&one()), "1/1");
        assert_eq!(to_fraction_string(&zero()), "0/1");
    }

    #[test]
    fn parse_accepts_both_forms() {
        assert_eq!(parse_ratio("3/9"), Some(ratio(1, 3)));
        assert_eq!(parse_ratio(" 7 "), Some(ratio(7, 1)));
        assert_eq!(parse_ratio("1/0"), None);
        assert_eq!(parse_ratio("0.5"), None);
    }
}
