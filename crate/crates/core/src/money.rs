use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A cost, dual value or objective value in hundredths of a cost unit.
///
/// Arithmetic is checked: overflow panics instead of wrapping. Instances at
/// the sizes this crate targets stay several orders of magnitude below
/// `i64::MAX`, so an overflow always indicates corrupted input.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);
    pub const SCALE: i64 = 100;

    pub const fn from_scaled(value: i64) -> Self {
        Money(value)
    }

    pub const fn scaled(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, rhs: Money) -> Option<Money> {
        self.0.checked_add(rhs.0).map(Money)
    }

    pub fn checked_sub(self, rhs: Money) -> Option<Money> {
        self.0.checked_sub(rhs.0).map(Money)
    }

    pub fn checked_mul(self, k: i64) -> Option<Money> {
        self.0.checked_mul(k).map(Money)
    }

    /// `self * quantity` for nonnegative shipment quantities.
    pub fn times(self, quantity: u64) -> Money {
        let q = i64::try_from(quantity).expect("quantity exceeds i64");
        self * q
    }

    pub fn abs(self) -> Money {
        Money(self.0.checked_abs().expect("money overflow in abs"))
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Value in original cost units. Lossy; used for ratios only.
    pub fn to_units_f64(self) -> f64 {
        self.0 as f64 / Self::SCALE as f64
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        self.checked_add(rhs).expect("money overflow in add")
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        self.checked_sub(rhs).expect("money overflow in sub")
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(self.0.checked_neg().expect("money overflow in neg"))
    }
}

impl Mul<i64> for Money {
    type Output = Money;
    fn mul(self, k: i64) -> Money {
        self.checked_mul(k).expect("money overflow in mul")
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        *self = *self + rhs;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        *self = *self - rhs;
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Money> for Money {
    fn sum<I: Iterator<Item = &'a Money>>(iter: I) -> Money {
        iter.copied().sum()
    }
}

/// Formats in original units with exactly two decimals, e.g. `-14.00`.
impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let s = format!("{sign}{}.{:02}", abs / 100, abs % 100);
        f.pad(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse {0:?} as an amount with at most two decimals")]
pub struct ParseMoneyError(String);

/// Parses an amount in original units (`"0.01"`, `"-14"`, `"3.5"`).
impl FromStr for Money {
    type Err = ParseMoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseMoneyError(s.to_string());
        let t = s.trim();
        let (negative, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
        if whole.is_empty() && frac.is_empty() {
            return Err(err());
        }
        if frac.len() > 2
            || !whole
                .chars()
                .chain(frac.chars())
                .all(|c| c.is_ascii_digit())
        {
            return Err(err());
        }
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| err())?
        };
        let frac: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().map_err(|_| err())? * 10,
            _ => frac.parse().map_err(|_| err())?,
        };
        let value = whole
            .checked_mul(Money::SCALE)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(err)?;
        Ok(Money(if negative { -value } else { value }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_two_decimals() {
        assert_eq!(Money::from_scaled(1000).to_string(), "10.00");
        assert_eq!(Money::from_scaled(-1400).to_string(), "-14.00");
        assert_eq!(Money::from_scaled(-5).to_string(), "-0.05");
        assert_eq!(Money::from_scaled(7).to_string(), "0.07");
        assert_eq!(Money::ZERO.to_string(), "0.00");
    }

    #[test]
    fn parse_original_units() {
        assert_eq!("0.01".parse::<Money>().unwrap(), Money::from_scaled(1));
        assert_eq!("-14".parse::<Money>().unwrap(), Money::from_scaled(-1400));
        assert_eq!("3.5".parse::<Money>().unwrap(), Money::from_scaled(350));
        assert_eq!(".25".parse::<Money>().unwrap(), Money::from_scaled(25));
        assert!("1.234".parse::<Money>().is_err());
        assert!("abc".parse::<Money>().is_err());
        assert!("".parse::<Money>().is_err());
        assert!("-".parse::<Money>().is_err());
    }

    #[test]
    #[should_panic(expected = "money overflow")]
    fn overflow_is_fatal() {
        let _ = Money::from_scaled(i64::MAX) + Money::from_scaled(1);
    }

    #[test]
    fn checked_ops_report_overflow() {
        assert_eq!(
            Money::from_scaled(i64::MIN).checked_sub(Money::from_scaled(1)),
            None
        );
        assert_eq!(Money::from_scaled(i64::MAX / 2 + 1).checked_mul(2), None);
    }
}
