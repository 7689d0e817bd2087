//! Fixed-point currency. Everything is stored in integer cents so that order
//! matching, commitments and conservation checks are exact.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Whole shares.
pub type Qty = u64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("`{0}` is not a decimal amount")]
    Syntax(String),
    #[error("amount {0} is not finite")]
    NotFinite(String),
    #[error("amount {0} is out of range")]
    OutOfRange(String),
    #[error("price must be positive, got {0}")]
    NonPositive(String),
}

/// Rounds a float to the nearest cent, ties away from zero.
fn f64_to_cents(value: f64) -> Result<i64, AmountError> {
    if !value.is_finite() {
        return Err(AmountError::NotFinite(value.to_string()));
    }
    let scaled = (value * 100.0).round();
    if scaled.abs() > 9.0e15 {
        return Err(AmountError::OutOfRange(value.to_string()));
    }
    Ok(scaled as i64)
}

/// Parses `-12.5`, `12`, `12.345` (rounded half away from zero to cents).
fn parse_cents(text: &str) -> Result<i64, AmountError> {
    let trimmed = text.trim();
    let syntax = || AmountError::Syntax(text.to_string());
    let (negative, digits) = match trimmed.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, trimmed.strip_prefix('+').unwrap_or(trimmed)),
    };
    let (whole, frac) = match digits.split_once('.') {
        Some((w, f)) => (w, f),
        None => (digits, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(syntax());
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(syntax());
    }
    let whole: i64 = if whole.is_empty() {
        0
    } else {
        whole
            .parse()
            .map_err(|_| AmountError::OutOfRange(text.to_string()))?
    };
    let frac_bytes = frac.as_bytes();
    let digit = |i: usize| frac_bytes.get(i).map_or(0, |b| i64::from(b - b'0'));
    let mut cents = digit(0) * 10 + digit(1);
    if digit(2) >= 5 {
        cents += 1;
    }
    let total = whole
        .checked_mul(100)
        .and_then(|w| w.checked_add(cents))
        .ok_or_else(|| AmountError::OutOfRange(text.to_string()))?;
    Ok(if negative { -total } else { total })
}

fn fmt_cents(cents: i64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let sign = if cents < 0 { "-" } else { "" };
    let abs = cents.unsigned_abs();
    write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
}

/// Signed amount of cash in cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_cents(cents: i64) -> Self {
        Money(cents)
    }

    pub const fn cents(self) -> i64 {
        self.0
    }

    pub fn from_f64(value: f64) -> Result<Self, AmountError> {
        f64_to_cents(value).map(Money)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn is_negative(self) -> bool {
        self.0 < 0
    }

    /// Largest share count affordable at `price`, zero for non-positive cash.
    pub fn shares_at(self, price: Price) -> Qty {
        if self.0 <= 0 {
            0
        } else {
            (self.0 / price.cents()) as Qty
        }
    }

    /// `self × rate`, rounded half away from zero to the cent.
    pub fn scale(self, rate: f64) -> Money {
        Money((self.0 as f64 * rate).round() as i64)
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_cents(self.0, f)
    }
}

impl FromStr for Money {
    type Err = AmountError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_cents(s).map(Money)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl Neg for Money {
    type Output = Money;
    fn neg(self) -> Money {
        Money(-self.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

/// Strictly positive price per share, in cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(i64);

impl Price {
    pub fn from_cents(cents: i64) -> Result<Self, AmountError> {
        if cents <= 0 {
            Err(AmountError::NonPositive(Money(cents).to_string()))
        } else {
            Ok(Price(cents))
        }
    }

    pub const fn cents(self) -> i64 {
        self.0
    }

    pub fn from_f64(value: f64) -> Result<Self, AmountError> {
        Price::from_cents(f64_to_cents(value)?)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }

    pub fn as_money(self) -> Money {
        Money(self.0)
    }

    /// Midpoint of two prices, half-up to the cent.
    pub fn midpoint(a: Price, b: Price) -> Price {
        Price((a.0 + b.0 + 1).div_euclid(2))
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_cents(self.0, f)
    }
}

impl FromStr for Price {
    type Err = AmountError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Price::from_cents(parse_cents(s)?)
    }
}

impl Mul<Qty> for Price {
    type Output = Money;
    fn mul(self, qty: Qty) -> Money {
        Money(self.0 * qty as i64)
    }
}

// Wire format is a JSON number (29.5); numeric strings are accepted on input.

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrText {
    Number(f64),
    Text(String),
}

impl Serialize for Price {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Price {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrText::deserialize(d)? {
            NumberOrText::Number(v) => Price::from_f64(v),
            NumberOrText::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrText::deserialize(d)? {
            NumberOrText::Number(v) => Money::from_f64(v),
            NumberOrText::Text(t) => t.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_is_two_decimals() {
        assert_eq!(Price::from_cents(2950).unwrap().to_string(), "29.50");
        assert_eq!(Money::from_cents(-105).to_string(), "-1.05");
        assert_eq!(Money::from_cents(5).to_string(), "0.05");
    }

    #[test]
    fn parsing_rounds_to_cents() {
        assert_eq!("28".parse::<Price>().unwrap().cents(), 2800);
        assert_eq!("29.5".parse::<Price>().unwrap().cents(), 2950);
        assert_eq!("0.125".parse::<Money>().unwrap().cents(), 13);
        assert_eq!("-3.10".parse::<Money>().unwrap().cents(), -310);
        assert!("abc".parse::<Money>().is_err());
        assert!("0".parse::<Price>().is_err());
        assert!("1.2.3".parse::<Money>().is_err());
    }

    #[test]
    fn float_conversion() {
        assert_eq!(Price::from_f64(25.2).unwrap().cents(), 2520);
        assert_eq!(Money::from_f64(0.015).unwrap().cents(), 2);
        assert!(Price::from_f64(f64::NAN).is_err());
    }

    #[test]
    fn midpoint_rounds_half_up() {
        let a = Price::from_cents(2800).unwrap();
        let b = Price::from_cents(2901).unwrap();
        assert_eq!(Price::midpoint(a, b).cents(), 2851);
    }

    #[test]
    fn affordable_shares() {
        let p = Price::from_cents(2900).unwrap();
        assert_eq!(Money::from_cents(5000).shares_at(p), 1);
        assert_eq!(Money::from_cents(-1).shares_at(p), 0);
        assert_eq!(p * 3, Money::from_cents(8700));
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let p: Price = serde_json::from_str("29.5").unwrap();
        let q: Price = serde_json::from_str("\"29.50\"").unwrap();
        assert_eq!(p, q);
        assert_eq!(serde_json::to_string(&p).unwrap(), "29.5");
    }
}
