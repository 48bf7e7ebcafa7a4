//! Scalar kinds carried by signals: exact rationals for oracle-grade checks and
//! `f64` for the continuous-time and image paths.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, RowSpace, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueKind {
    ExactRational,
    Float,
}

/// Field element usable as a signal value.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const KIND: ValueKind;

    fn to_f64(&self) -> f64;

    /// Lossless for integers; `f64` conversion for the float kind.
    fn from_i64(v: i64) -> Self;

    fn parse_token(token: &str) -> Result<Self>;

    fn format_token(&self) -> String;

    /// Exact zero test for rationals, tolerance test for floats.
    fn is_negligible(&self, scale: f64) -> bool;

    fn row_space(rows: &[Vec<Self>], n: usize) -> RowSpace;

    /// Least-squares solve; `None` when the rows do not reach rank `n`.
    fn solve(rows: &[Vec<Self>], rhs: &[Self], n: usize) -> Option<Solution<Self>>;
}

impl Scalar for f64 {
    const KIND: ValueKind = ValueKind::Float;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn parse_token(token: &str) -> Result<Self> {
        let token = token.trim();
        if let Some((num, den)) = token.split_once('/') {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{token}`")))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{token}`")))?;
            return Ok(num / den);
        }
        token
            .parse()
            .map_err(|_| Error::Parse(format!("bad number `{token}`")))
    }

    fn format_token(&self) -> String {
        // shortest round-trip representation
        format!("{self:?}")
    }

    fn is_negligible(&self, scale: f64) -> bool {
        self.abs() <= 1e-9 * scale.max(1.0)
    }

    fn row_space(rows: &[Vec<Self>], n: usize) -> RowSpace {
        linalg::float_row_space(rows, n)
    }

    fn solve(rows: &[Vec<Self>], rhs: &[Self], n: usize) -> Option<Solution<Self>> {
        linalg::float_solve(rows, rhs, n)
    }
}

impl Scalar for BigRational {
    const KIND: ValueKind = ValueKind::ExactRational;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn parse_token(token: &str) -> Result<Self> {
        parse_rational(token)
    }

    fn format_token(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn is_negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }

    fn row_space(rows: &[Vec<Self>], n: usize) -> RowSpace {
        linalg::exact_row_space(rows, n)
    }

    fn solve(rows: &[Vec<Self>], rhs: &[Self], n: usize) -> Option<Solution<Self>> {
        linalg::exact_solve(rows, rhs, n)
    }
}

/// Parses `a`, `a/b` or a plain decimal such as `-1.25` into an exact rational.
pub fn parse_rational(token: &str) -> Result<BigRational> {
    let token = token.trim();
    let bad = || Error::Parse(format!("bad rational `{token}`"));
    if let Some((num, den)) = token.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = token.split_once('.') {
        if frac_part.is_empty() || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        let digits = format!(
            "{}{}",
            if int_digits.is_empty() { "0" } else { int_digits },
            frac_part
        );
        let mut num = BigInt::from_str(&digits).map_err(|_| bad())?;
        if negative {
            num = -num;
        }
        let den = num::pow(BigInt::from(10), frac_part.len());
        return Ok(BigRational::new(num, den));
    }
    BigInt::from_str(token)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

/// Shorthand for an exact rational `num/den`.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}
