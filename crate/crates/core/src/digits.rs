//! Base codecs and the digit-wise transforms.
//!
//! Every transform here works position by position on the base-`n`
//! expansions of its two operands, padding the shorter one with zeros:
//!
//! | transform  | digit rule                       | placed at   |
//! |------------|----------------------------------|-------------|
//! | [`cvt`]    | `(a_i + b_i) / n` (0 or 1)       | `n^(i + 1)` |
//! | [`sv`]     | `(a_i + b_i) % n`                | `n^i`       |
//! | [`evt_max`]| `max(a_i, b_i)`                  | `n^i`       |
//! | [`evt_min`]| `min(a_i, b_i)`                  | `n^i`       |
//!
//! so that `a + b == cvt + sv` and `a + b == evt_max + evt_min` hold for
//! every base. Results that would not fit in a `u64` are reported as
//! [`Error::RangeOverflow`], never wrapped.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Radix of a positional number system, at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Base(u64);

impl Base {
    pub const BINARY: Base = Base(2);

    pub fn new(value: u64) -> Result<Self> {
        if value < 2 {
            return Err(Error::InvalidBase(value));
        }
        Ok(Base(value))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// `self^exp`, or `RangeOverflow`.
    pub fn pow(self, exp: u32) -> Result<u64> {
        self.0.checked_pow(exp).ok_or(Error::RangeOverflow)
    }

    /// Number of digits needed to write `value` (zero needs none).
    pub fn digit_len(self, mut value: u64) -> usize {
        let mut len = 0;
        while value > 0 {
            value /= self.0;
            len += 1;
        }
        len
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<u64> for Base {
    type Error = Error;

    fn try_from(value: u64) -> Result<Self> {
        Base::new(value)
    }
}

/// Little-endian digit expansion: `digits()[i]` is the coefficient of `base^i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitVec {
    base: Base,
    digits: Vec<u64>,
}

impl DigitVec {
    pub fn new(base: Base, digits: Vec<u64>) -> Result<Self> {
        if let Some(&d) = digits.iter().find(|&&d| d >= base.get()) {
            return Err(Error::InvalidArgument(format!(
                "digit {d} out of range for base {base}"
            )));
        }
        Ok(DigitVec { base, digits })
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn width(&self) -> usize {
        self.digits.len()
    }

    /// Digits most-significant first, the order they are usually written in.
    pub fn to_msb_string(&self) -> String {
        let mut s = String::new();
        for (i, d) in self.digits.iter().rev().enumerate() {
            if self.base.get() > 10 && i > 0 {
                s.push(':');
            }
            s.push_str(&d.to_string());
        }
        s
    }
}

/// Expands `value` into exactly `width` base-`base` digits, least significant first.
pub fn to_digits(value: u64, base: Base, width: usize) -> Result<DigitVec> {
    if width == 0 {
        return Err(Error::InvalidArgument("width must be at least 1".into()));
    }
    let exp = u32::try_from(width).map_err(|_| Error::RangeOverflow)?;
    let limit = base.pow(exp)?;
    if value >= limit {
        return Err(Error::ValueTooWide {
            value,
            base: base.get(),
            width,
        });
    }
    let n = base.get();
    let mut rest = value;
    let digits = (0..width)
        .map(|_| {
            let d = rest % n;
            rest /= n;
            d
        })
        .collect();
    Ok(DigitVec { base, digits })
}

pub fn from_digits(d: &DigitVec) -> Result<u64> {
    let n = d.base.get();
    d.digits.iter().rev().try_fold(0u64, |acc, &digit| {
        acc.checked_mul(n)
            .and_then(|v| v.checked_add(digit))
            .ok_or(Error::RangeOverflow)
    })
}

/// Sums `rule(a_i, b_i) * n^(i + shift)` over the common digit width of `a`
/// and `b`. Place values are only materialized when a nonzero digit needs
/// them, so a zero result never overflows.
fn fold_digits(
    a: u64,
    b: u64,
    base: Base,
    shift: u32,
    rule: impl Fn(u64, u64) -> u64,
) -> Result<u64> {
    let n = base.get();
    let mut place = n.checked_pow(shift);
    let (mut a, mut b) = (a, b);
    let mut acc = 0u64;
    while a > 0 || b > 0 {
        let digit = rule(a % n, b % n);
        if digit != 0 {
            let term = place
                .and_then(|p| p.checked_mul(digit))
                .ok_or(Error::RangeOverflow)?;
            acc = acc.checked_add(term).ok_or(Error::RangeOverflow)?;
        }
        a /= n;
        b /= n;
        place = place.and_then(|p| p.checked_mul(n));
    }
    Ok(acc)
}

/// Carry value transformation: the carries of `a + b`, each stored one
/// position to the left of the digit pair that produced it.
pub fn cvt(a: u64, b: u64, base: Base) -> Result<u64> {
    let n = base.get();
    fold_digits(a, b, base, 1, |x, y| (x + y) / n)
}

/// Sum value: digit-wise addition modulo the base, carries dropped.
pub fn sv(a: u64, b: u64, base: Base) -> Result<u64> {
    let n = base.get();
    fold_digits(a, b, base, 0, |x, y| (x + y) % n)
}

/// Extreme value transformation, digit-wise maximum.
pub fn evt_max(a: u64, b: u64, base: Base) -> Result<u64> {
    fold_digits(a, b, base, 0, u64::max)
}

/// Extreme value transformation, digit-wise minimum.
pub fn evt_min(a: u64, b: u64, base: Base) -> Result<u64> {
    fold_digits(a, b, base, 0, u64::min)
}
