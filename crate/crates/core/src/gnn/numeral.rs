use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact non-negative integer kept as base-10 digits, least significant
/// first, without leading zeros. Zero has no digits.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Numeral {
    digits: Vec<u8>,
}

impl Numeral {
    pub fn zero() -> Self {
        Numeral { digits: Vec::new() }
    }

    pub fn one() -> Self {
        Numeral::from(1u64)
    }

    pub fn from_bool(b: bool) -> Self {
        if b {
            Numeral::one()
        } else {
            Numeral::zero()
        }
    }

    /// `10^n`.
    pub fn pow10(n: usize) -> Self {
        let mut digits = vec![0; n + 1];
        digits[n] = 1;
        Numeral { digits }
    }

    /// `11…1` with `n` ones; zero for `n = 0`.
    pub fn repunit(n: usize) -> Self {
        Numeral { digits: vec![1; n] }
    }

    fn trimmed(mut digits: Vec<u8>) -> Self {
        while digits.last() == Some(&0) {
            digits.pop();
        }
        Numeral { digits }
    }

    pub fn is_zero(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.digits == [1]
    }

    /// The `i`-th decimal digit, counting from the least significant.
    pub fn digit(&self, i: usize) -> u8 {
        self.digits.get(i).copied().unwrap_or(0)
    }

    /// `Some(n)` iff the value is `10^n`.
    pub fn as_pow10(&self) -> Option<usize> {
        let (last, rest) = self.digits.split_last()?;
        (*last == 1 && rest.iter().all(|&d| d == 0)).then_some(rest.len())
    }

    pub fn is_repunit(&self, n: usize) -> bool {
        self.digits.len() == n && self.digits.iter().all(|&d| d == 1)
    }

    /// Number of decimal digits (0 for zero).
    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn add(&self, other: &Numeral) -> Numeral {
        let width = self.digits.len().max(other.digits.len());
        let mut out = Vec::with_capacity(width + 1);
        let mut carry = 0u8;
        for i in 0..width {
            let s = self.digit(i) + other.digit(i) + carry;
            out.push(s % 10);
            carry = s / 10;
        }
        if carry > 0 {
            out.push(carry);
        }
        Numeral::trimmed(out)
    }

    /// Digit-wise maximum; on numerals with digits in `{0, 1}` this is the
    /// bitwise OR of the decimal representations.
    pub fn or(&self, other: &Numeral) -> Numeral {
        let width = self.digits.len().max(other.digits.len());
        Numeral::trimmed((0..width).map(|i| self.digit(i).max(other.digit(i))).collect())
    }

    /// Value as `usize` if it fits.
    pub fn to_usize(&self) -> Option<usize> {
        self.digits
            .iter()
            .rev()
            .try_fold(0usize, |acc, &d| acc.checked_mul(10)?.checked_add(d as usize))
    }
}

impl From<u64> for Numeral {
    fn from(mut v: u64) -> Self {
        let mut digits = Vec::new();
        while v > 0 {
            digits.push((v % 10) as u8);
            v /= 10;
        }
        Numeral { digits }
    }
}

impl Ord for Numeral {
    fn cmp(&self, other: &Self) -> Ordering {
        self.digits
            .len()
            .cmp(&other.digits.len())
            .then_with(|| self.digits.iter().rev().cmp(other.digits.iter().rev()))
    }
}

impl PartialOrd for Numeral {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Numeral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.digits.is_empty() {
            return f.write_str("0");
        }
        let s: String = self.digits.iter().rev().map(|d| (b'0' + d) as char).collect();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a decimal numeral: `{0}`")]
pub struct NumeralParseError(pub String);

impl FromStr for Numeral {
    type Err = NumeralParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(NumeralParseError(s.to_string()));
        }
        Ok(Numeral::trimmed(s.bytes().rev().map(|b| b - b'0').collect()))
    }
}

impl Serialize for Numeral {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Numeral {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
