//! Extended reals with total arithmetic.
//!
//! Squared norms and costs live in `[0, +inf]`, log normalization constants
//! in `[-inf, 0]`. Infinities are first-class values rather than IEEE
//! special cases so that `exp(-inf) = 0` and `x + inf = inf` hold by
//! construction.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities onto the dedicated variants.
    pub fn from_f64(x: f64) -> Self {
        if x == f64::INFINITY {
            ExtReal::PosInfinity
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInfinity
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInfinity => f64::INFINITY,
            ExtReal::NegInfinity => f64::NEG_INFINITY,
        }
    }

    /// `exp` with `exp(-inf) = 0` and `exp(+inf) = +inf`.
    pub fn exp(&self) -> ExtReal {
        match *self {
            ExtReal::Finite(x) => ExtReal::from_f64(x.exp()),
            ExtReal::PosInfinity => ExtReal::PosInfinity,
            ExtReal::NegInfinity => ExtReal::ZERO,
        }
    }

    /// Scales by a real factor; `0 * inf = 0`.
    pub fn scale(&self, t: f64) -> ExtReal {
        match *self {
            ExtReal::Finite(x) => ExtReal::Finite(x * t),
            _ if t == 0.0 => ExtReal::ZERO,
            ExtReal::PosInfinity if t > 0.0 => ExtReal::PosInfinity,
            ExtReal::PosInfinity => ExtReal::NegInfinity,
            ExtReal::NegInfinity if t > 0.0 => ExtReal::NegInfinity,
            ExtReal::NegInfinity => ExtReal::PosInfinity,
        }
    }
}

impl Default for ExtReal {
    fn default() -> Self {
        ExtReal::ZERO
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

/// Total within each cone. Mixing `+inf` and `-inf` never happens for the
/// quantities in this crate; the sum is defined as `+inf` there so the
/// operation stays total.
impl Add for ExtReal {
    type Output = ExtReal;

    fn add(self, rhs: ExtReal) -> ExtReal {
        use ExtReal::*;
        match (self, rhs) {
            (Finite(a), Finite(b)) => ExtReal::from_f64(a + b),
            (PosInfinity, _) | (_, PosInfinity) => PosInfinity,
            (NegInfinity, _) | (_, NegInfinity) => NegInfinity,
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;

    fn neg(self) -> ExtReal {
        self.scale(-1.0)
    }
}

impl Mul<f64> for ExtReal {
    type Output = ExtReal;

    fn mul(self, t: f64) -> ExtReal {
        self.scale(t)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ExtReal::Finite(x) => write!(f, "{x:?}"),
            ExtReal::PosInfinity => f.write_str("inf"),
            ExtReal::NegInfinity => f.write_str("-inf"),
        }
    }
}

// JSON has no infinities: finite values are numbers, the infinities the
// literal strings "inf" and "-inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match *self {
            ExtReal::Finite(x) => serializer.serialize_f64(x),
            ExtReal::PosInfinity => serializer.serialize_str("inf"),
            ExtReal::NegInfinity => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtReal, E> {
                match v {
                    "inf" | "+inf" => Ok(ExtReal::PosInfinity),
                    "-inf" => Ok(ExtReal::NegInfinity),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_negative_infinity_is_exactly_zero() {
        assert_eq!(ExtReal::NegInfinity.exp(), ExtReal::Finite(0.0));
        assert_eq!(ExtReal::NegInfinity.exp().to_f64().to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn addition_absorbs_infinity() {
        assert_eq!(ExtReal::Finite(2.0) + ExtReal::Finite(3.0), ExtReal::Finite(5.0));
        assert_eq!(ExtReal::Finite(2.0) + ExtReal::PosInfinity, ExtReal::PosInfinity);
        assert_eq!(ExtReal::NegInfinity + ExtReal::Finite(-1.0), ExtReal::NegInfinity);
    }

    #[test]
    fn scaling() {
        assert_eq!(ExtReal::PosInfinity.scale(-0.5), ExtReal::NegInfinity);
        assert_eq!(ExtReal::PosInfinity.scale(0.0), ExtReal::ZERO);
        assert_eq!(-ExtReal::Finite(1.5), ExtReal::Finite(-1.5));
    }

    #[test]
    fn ordering() {
        assert!(ExtReal::NegInfinity < ExtReal::Finite(-1e300));
        assert!(ExtReal::Finite(1e300) < ExtReal::PosInfinity);
    }

    #[test]
    fn json_uses_strings_for_infinities() {
        let v = vec![ExtReal::Finite(-0.5), ExtReal::NegInfinity, ExtReal::PosInfinity];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[-0.5,"-inf","inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
