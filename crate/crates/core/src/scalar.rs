//! Arithmetic backends.
//!
//! Every closed form in the crate is written once against [`Field`] and runs
//! either in `f64` or exactly in [`BigRational`]. The quadratic extension
//! [`QuadExt`] adjoins `sqrt(d)` symbolically, so expressions in the kernel
//! roots `1 + rho ± sqrt(1 + rho^2)` stay exact for rational `rho`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{JsqError, Result};

/// A commutative field with enough structure for the recursions in this crate.
pub trait Field:
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
{
    /// True when arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    /// Nearest `f64`; used for pivot selection and reporting.
    fn approx(&self) -> f64;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn powi(&self, n: usize) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc * base.clone();
            }
            n >>= 1;
            if n > 0 {
                base = base.clone() * base;
            }
        }
        acc
    }
}

/// An ordered field: the backends usable for probabilities.
pub trait Scalar: Field + PartialOrd {
    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Field for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn approx(&self) -> f64 {
        *self
    }

    fn powi(&self, n: usize) -> Self {
        match i32::try_from(n) {
            Ok(n) => f64::powi(*self, n),
            Err(_) => f64::powf(*self, n as f64),
        }
    }
}

impl Scalar for f64 {}

impl Field for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or_else(|| {
            // numerator/denominator can individually overflow f64
            let n = self.numer().bits() as i64;
            let d = self.denom().bits() as i64;
            let shift = n.max(d) - 1000;
            let num = (self.numer() >> shift.max(0) as usize).to_f64().unwrap_or(f64::NAN);
            let den = (self.denom() >> shift.max(0) as usize).to_f64().unwrap_or(f64::NAN);
            num / den
        })
    }
}

impl Scalar for BigRational {
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
}

/// `sum_{k=0}^{n} x^k`, accumulated Horner-style.
pub fn geometric_sum<T: Field>(x: &T, n: usize) -> T {
    let mut acc = T::one();
    for _ in 0..n {
        acc = acc * x.clone() + T::one();
    }
    acc
}

/// Parses `"3/4"`, `"0.75"`, `"1e-3"` or `"2"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || JsqError::Parse(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u8);
    let mut value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        value = -value;
    }
    Ok(value)
}

/// Element `a + b·sqrt(d)` of a quadratic extension of `F`.
///
/// `d` travels with the value; zero and one carry `d = 0` and adopt the
/// radicand of whatever they are combined with.
#[derive(Clone, Debug)]
pub struct QuadExt<F> {
    pub a: F,
    pub b: F,
    pub d: F,
}

impl<F: Field> QuadExt<F> {
    pub fn rational(a: F, d: F) -> Self {
        QuadExt { a, b: F::zero(), d }
    }

    /// The adjoined root `sqrt(d)` itself.
    pub fn root(d: F) -> Self {
        QuadExt {
            a: F::zero(),
            b: F::one(),
            d,
        }
    }

    /// The base-field part, provided the irrational part vanishes exactly.
    pub fn to_base(&self) -> Option<F> {
        self.b.is_zero().then(|| self.a.clone())
    }

    fn radicand(&self, other: &Self) -> F {
        if self.d.is_zero() {
            other.d.clone()
        } else {
            self.d.clone()
        }
    }
}

impl<F: Field> PartialEq for QuadExt<F> {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b
    }
}

impl<F: Field> Add for QuadExt<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let d = self.radicand(&rhs);
        QuadExt {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
            d,
        }
    }
}

impl<F: Field> Sub for QuadExt<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let d = self.radicand(&rhs);
        QuadExt {
            a: self.a - rhs.a,
            b: self.b - rhs.b,
            d,
        }
    }
}

impl<F: Field> Mul for QuadExt<F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let d = self.radicand(&rhs);
        QuadExt {
            a: self.a.clone() * rhs.a.clone() + self.b.clone() * rhs.b.clone() * d.clone(),
            b: self.a * rhs.b + self.b * rhs.a,
            d,
        }
    }
}

impl<F: Field> Div for QuadExt<F> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let d = self.radicand(&rhs);
        let norm = rhs.a.clone() * rhs.a.clone() - rhs.b.clone() * rhs.b.clone() * d.clone();
        let conj = QuadExt {
            a: rhs.a / norm.clone(),
            b: -(rhs.b / norm),
            d,
        };
        self * conj
    }
}

impl<F: Field> Neg for QuadExt<F> {
    type Output = Self;
    fn neg(self) -> Self {
        QuadExt {
            a: -self.a,
            b: -self.b,
            d: self.d,
        }
    }
}

impl<F: Field> Zero for QuadExt<F> {
    fn zero() -> Self {
        QuadExt {
            a: F::zero(),
            b: F::zero(),
            d: F::zero(),
        }
    }
    fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

impl<F: Field> One for QuadExt<F> {
    fn one() -> Self {
        QuadExt {
            a: F::one(),
            b: F::zero(),
            d: F::zero(),
        }
    }
}

impl<F: Field> Field for QuadExt<F> {
    const EXACT: bool = F::EXACT;

    fn from_i64(v: i64) -> Self {
        QuadExt {
            a: F::from_i64(v),
            b: F::zero(),
            d: F::zero(),
        }
    }

    fn approx(&self) -> f64 {
        self.a.approx() + self.b.approx() * self.d.approx().sqrt()
    }
}
