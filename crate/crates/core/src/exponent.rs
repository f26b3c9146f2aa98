//! Nonlinearity exponents that may be held exactly.
//!
//! The existence theory is knife-edge at `p = 1 + 4/(n+2)`, `p = 1 + 4/n` and
//! `p = p*(n)`. Rational exponents compare exactly against those boundaries;
//! floating exponents compare with ordinary `f64` ordering.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Exact(Rational),
    Real(f64),
}

impl Exponent {
    pub fn integer(v: i64) -> Self {
        Exponent::Exact(Rational::from_integer(v as i128))
    }

    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        Ok(Exponent::Exact(Rational::new(num as i128, den as i128)))
    }

    pub fn real(v: f64) -> Self {
        Exponent::Real(v)
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Exponent::Real(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Exponent::Exact(_))
    }

    /// Exact comparison when both sides are rational, `f64` ordering otherwise.
    pub fn compare(&self, other: &Exponent) -> Ordering {
        match (self, other) {
            (Exponent::Exact(a), Exponent::Exact(b)) => a.cmp(b),
            _ => self
                .value()
                .partial_cmp(&other.value())
                .unwrap_or(Ordering::Equal),
        }
    }

    fn zip(
        self,
        other: Exponent,
        exact: impl Fn(Rational, Rational) -> Rational,
        real: impl Fn(f64, f64) -> f64,
    ) -> Exponent {
        match (self, other) {
            (Exponent::Exact(a), Exponent::Exact(b)) => Exponent::Exact(exact(a, b)),
            (a, b) => Exponent::Real(real(a.value(), b.value())),
        }
    }
}

macro_rules! exponent_op {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait for Exponent {
            type Output = Exponent;

            fn $method(self, other: Exponent) -> Exponent {
                self.zip(other, |a, b| a $op b, |a, b| a $op b)
            }
        }
    };
}

exponent_op!(Add, add, +);
exponent_op!(Sub, sub, -);
exponent_op!(Mul, mul, *);
// Division by a zero exact exponent panics; callers only divide by p − 1 > 0.
exponent_op!(Div, div, /);

impl From<f64> for Exponent {
    fn from(v: f64) -> Self {
        Exponent::Real(v)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Exact(r) if *r.denom() == 1 => write!(f, "{}", r.numer()),
            Exponent::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Exponent::Real(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    /// Accepts `num/den`, plain integers and plain decimals (all exact), and
    /// anything else `f64` parses (held as a floating value).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParameter(format!("cannot parse exponent '{s}'"));
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad())?;
            let den: i64 = den.trim().parse().map_err(|_| bad())?;
            return Exponent::ratio(num, den);
        }
        if let Some(r) = parse_decimal(s) {
            return Ok(Exponent::Exact(r));
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        if !v.is_finite() {
            return Err(bad());
        }
        Ok(Exponent::Real(v))
    }
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) || frac.len() > 18 {
        return None;
    }
    let digits: i128 = format!("{int}{frac}").parse().ok()?;
    let den = 10i128.checked_pow(frac.len() as u32)?;
    let r = Rational::new(digits, den);
    Some(if neg { -r } else { r })
}

/// Critical Sobolev exponent `p*(n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SobolevExponent {
    Infinite,
    Finite(Exponent),
}

impl SobolevExponent {
    pub fn value(&self) -> f64 {
        match self {
            SobolevExponent::Infinite => f64::INFINITY,
            SobolevExponent::Finite(e) => e.value(),
        }
    }

    pub fn is_subcritical(&self, p: &Exponent) -> bool {
        match self {
            SobolevExponent::Infinite => true,
            SobolevExponent::Finite(crit) => p.compare(crit) == Ordering::Less,
        }
    }
}

pub fn sobolev_exponent(n: u32) -> SobolevExponent {
    if n <= 2 {
        SobolevExponent::Infinite
    } else {
        let n = n as i64;
        SobolevExponent::Finite(Exponent::Exact(Rational::new(
            (n + 2) as i128,
            (n - 2) as i128,
        )))
    }
}

pub fn is_supercritical(n: u32, p: &Exponent) -> bool {
    !sobolev_exponent(n).is_subcritical(p)
}

/// Floating-point form of the critical test, used where only `f64` exponents
/// are available.
pub(crate) fn is_supercritical_f64(n: u32, p: f64) -> bool {
    n >= 3 && p * (n as f64 - 2.0) >= n as f64 + 2.0
}
