//! Exact decimal values as scaled arbitrary-precision integers.
//!
//! A [`Decimal`] is `unscaled * 10^-scale`, normalized so that a given
//! numeric value has exactly one representation. Arithmetic (`+`, `-`,
//! `abs`) is exact, which keeps value equality well-defined; there is no
//! binary floating point anywhere in the data model.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Error produced when a lexical form is not a valid decimal.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid decimal literal `{0}`")]
pub struct ParseDecimalError(pub String);

/// An exact decimal number.
///
/// Normalization invariant: `scale` is minimal, i.e. either `scale == 0`
/// or `unscaled` is not divisible by 10. Zero is always `(0, 0)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decimal {
    unscaled: BigInt,
    scale: u32,
}

impl Decimal {
    pub fn new(unscaled: impl Into<BigInt>, scale: u32) -> Self {
        let mut d = Decimal {
            unscaled: unscaled.into(),
            scale,
        };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Decimal {
            unscaled: BigInt::zero(),
            scale: 0,
        }
    }

    pub fn from_bigint(i: BigInt) -> Self {
        Decimal {
            unscaled: i,
            scale: 0,
        }
    }

    fn normalize(&mut self) {
        if self.unscaled.is_zero() {
            self.scale = 0;
            return;
        }
        let ten = BigInt::from(10);
        while self.scale > 0 && (&self.unscaled % &ten).is_zero() {
            self.unscaled /= &ten;
            self.scale -= 1;
        }
    }

    /// Rescale both operands to a common scale.
    fn aligned(&self, other: &Decimal) -> (BigInt, BigInt, u32) {
        let scale = self.scale.max(other.scale);
        let a = &self.unscaled * pow10(scale - self.scale);
        let b = &other.unscaled * pow10(scale - other.scale);
        (a, b, scale)
    }

    pub fn abs(&self) -> Decimal {
        Decimal {
            unscaled: self.unscaled.abs(),
            scale: self.scale,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.unscaled.is_negative()
    }

    /// Numeric comparison against an integer.
    pub fn cmp_bigint(&self, i: &BigInt) -> Ordering {
        self.cmp(&Decimal::from_bigint(i.clone()))
    }

    /// Approximate conversion for geometric computations.
    pub fn to_f64(&self) -> f64 {
        let u = self.unscaled.to_f64().unwrap_or(f64::NAN);
        u / 10f64.powi(self.scale as i32)
    }

    /// Rounds a float to `scale` fractional digits, half away from zero.
    pub fn from_f64(value: f64, scale: u32) -> Option<Decimal> {
        if !value.is_finite() {
            return None;
        }
        let shifted = value * 10f64.powi(scale as i32);
        if shifted.abs() >= i128::MAX as f64 {
            return None;
        }
        Some(Decimal::new(BigInt::from(shifted.round() as i128), scale))
    }

    /// Canonical lexical form: at least one digit on each side of the
    /// decimal point, no trailing zeros, no exponent.
    pub fn lexical(&self) -> String {
        let digits = self.unscaled.abs().to_string();
        let sign = if self.unscaled.is_negative() { "-" } else { "" };
        let scale = self.scale as usize;
        if scale == 0 {
            return format!("{sign}{digits}.0");
        }
        if digits.len() <= scale {
            let pad = "0".repeat(scale - digits.len());
            format!("{sign}0.{pad}{digits}")
        } else {
            let (int, frac) = digits.split_at(digits.len() - scale);
            format!("{sign}{int}.{frac}")
        }
    }
}

fn pow10(exp: u32) -> BigInt {
    BigInt::from(10).pow(exp)
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexical())
    }
}

impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl Add for &Decimal {
    type Output = Decimal;
    fn add(self, rhs: &Decimal) -> Decimal {
        let (a, b, scale) = self.aligned(rhs);
        Decimal::new(a + b, scale)
    }
}

impl Sub for &Decimal {
    type Output = Decimal;
    fn sub(self, rhs: &Decimal) -> Decimal {
        let (a, b, scale) = self.aligned(rhs);
        Decimal::new(a - b, scale)
    }
}

impl Neg for &Decimal {
    type Output = Decimal;
    fn neg(self) -> Decimal {
        Decimal {
            unscaled: -&self.unscaled,
            scale: self.scale,
        }
    }
}

impl FromStr for Decimal {
    type Err = ParseDecimalError;

    /// Accepts `[+-]? digits [. digits]? ([eE] [+-]? digits)?` with digits
    /// required on at least one side of the point. Exponents are folded
    /// into the exact value (`0.999e2` is exactly `99.9`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseDecimalError(s.to_string());
        let body = s;
        let (mantissa, exp) = match body.find(['e', 'E']) {
            Some(i) => {
                let e: i32 = body[i + 1..].parse().map_err(|_| err())?;
                (&body[..i], e)
            }
            None => (body, 0),
        };
        let (sign, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (-1, rest),
            None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = match digits.find('.') {
            Some(i) => (&digits[..i], &digits[i + 1..]),
            None => (digits, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let joined = format!("{int_part}{frac_part}");
        let unscaled: BigInt = if joined.is_empty() {
            BigInt::zero()
        } else {
            joined.parse().map_err(|_| err())?
        };
        let unscaled = unscaled * BigInt::from(sign);
        // scale = fractional digits - exponent; a negative scale shifts the
        // unscaled value left instead.
        let scale = frac_part.len() as i64 - exp as i64;
        if scale >= 0 {
            Ok(Decimal::new(
                unscaled,
                u32::try_from(scale).map_err(|_| err())?,
            ))
        } else {
            let shift = u32::try_from(-scale).map_err(|_| err())?;
            Ok(Decimal::new(unscaled * pow10(shift), 0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dec(s: &str) -> Decimal {
        s.parse().unwrap()
    }

    #[test]
    fn parses_lexical_forms() {
        assert_eq!(dec("99.9"), Decimal::new(999, 1));
        assert_eq!(dec("0.999e2"), Decimal::new(999, 1));
        assert_eq!(dec("5e3"), Decimal::new(5000, 0));
        assert_eq!(dec("-0.50"), Decimal::new(-5, 1));
        assert_eq!(dec(".5"), Decimal::new(5, 1));
        assert_eq!(dec("5."), Decimal::new(5, 0));
        assert!("".parse::<Decimal>().is_err());
        assert!(".".parse::<Decimal>().is_err());
        assert!("1.2.3".parse::<Decimal>().is_err());
        assert!("1e".parse::<Decimal>().is_err());
    }

    #[test]
    fn normalization_gives_unique_representation() {
        assert_eq!(dec("5.94"), dec("5.9400"));
        assert_eq!(dec("15.0"), dec("15"));
        assert_eq!(dec("0.0"), dec("-0.000"));
        assert_eq!(dec("15.0").lexical(), "15.0");
        assert_eq!(dec("5.9400").lexical(), "5.94");
        assert_eq!(dec("-0.000").lexical(), "0.0");
        assert_eq!(dec("0.05").lexical(), "0.05");
    }

    #[test]
    fn exact_arithmetic() {
        assert_eq!(&dec("0.1") + &dec("0.2"), dec("0.3"));
        assert_eq!(&dec("1.0") - &dec("0.999"), dec("0.001"));
        assert_eq!(dec("-5.94").abs(), dec("5.94"));
        assert_eq!(&dec("99.9") + &dec("0.1"), dec("100"));
    }

    #[test]
    fn numeric_ordering() {
        assert!(dec("5.94") < dec("100.0"));
        assert!(dec("-1.5") < dec("0.0"));
        assert_eq!(dec("2.50").cmp(&dec("2.5")), Ordering::Equal);
        assert_eq!(dec("15.0").cmp_bigint(&BigInt::from(15)), Ordering::Equal);
        assert_eq!(dec("5.94").cmp_bigint(&BigInt::from(100)), Ordering::Less);
    }

    #[test]
    fn float_round_trip_at_fixed_scale() {
        let d = Decimal::from_f64(49.588141219961, 6).unwrap();
        assert_eq!(d.lexical(), "49.588141");
        assert_eq!(Decimal::from_f64(0.0, 6).unwrap(), Decimal::zero());
        assert!(Decimal::from_f64(f64::NAN, 6).is_none());
    }
}
