//! Closed forms for the blocking probability `pi_K(K, K)` of the symmetric
//! model and the boundary quantities derived from it.

use crate::error::{JsqError, Result};
use crate::model::SymmetricParams;
use crate::scalar::{geometric_sum, Scalar};

/// Largest capacity accepted by the closed forms.
pub const MAX_CAPACITY: usize = 1_000_000;

fn capacity<T: Scalar>(p: &SymmetricParams<T>) -> Result<usize> {
    if !(p.rho > T::zero()) {
        return Err(JsqError::param("rho", "must be positive"));
    }
    let k = p.cap()?;
    if k > MAX_CAPACITY {
        return Err(JsqError::param("cap", format!("closed forms support K <= {MAX_CAPACITY}")));
    }
    Ok(k)
}

/// `sum_{k=0}^{n-1} rho^{top-k} 2^{-k}` with `r = 1/rho`, i.e. the
/// correction sum of the blocking formula after division by `rho^top`.
fn scaled_correction<T: Scalar>(r: &T, top: usize, n: usize) -> T {
    let half_rho = T::one() / (T::from_i64(2) * r.clone());
    let mut term = r.powi(top);
    let mut acc = T::zero();
    for _ in 0..n {
        acc = acc + term.clone();
        term = term * half_rho.clone();
    }
    acc
}

/// `2 rho^m / (2 sum_{k<=m} rho^k - sum_{k<K} (rho/2)^k)`, the common shape
/// of both blocking formulas. For `rho > 1` numerator and denominator are
/// divided by `rho^m` first.
fn blocking_shape<T: Scalar>(rho: &T, m: usize, k: usize) -> T {
    let two = T::from_i64(2);
    if *rho <= T::one() {
        let half = rho.clone() / two.clone();
        let correction = if k == 0 { T::zero() } else { geometric_sum(&half, k - 1) };
        two.clone() * rho.powi(m) / (two * geometric_sum(rho, m) - correction)
    } else {
        let r = T::one() / rho.clone();
        two.clone() / (two * geometric_sum(&r, m) - scaled_correction(&r, m, k))
    }
}

/// Blocking probability `pi_K(K, K)`.
pub fn blocking_probability<T: Scalar>(p: &SymmetricParams<T>) -> Result<T> {
    let k = capacity(p)?;
    if k == 0 {
        return Ok(T::one());
    }
    Ok(blocking_shape(&p.rho, 2 * k, k))
}

/// The same quantity through the rational closed form, with the special
/// cases `rho = 1` and `rho = 2`.
pub fn blocking_probability_piecewise<T: Scalar>(p: &SymmetricParams<T>) -> Result<T> {
    let k = capacity(p)?;
    let rho = p.rho.clone();
    let one = T::one();
    let two = T::from_i64(2);
    if k == 0 {
        return Ok(one);
    }
    if rho == one {
        let kk = T::from_i64(2 * k as i64);
        return Ok(one.clone() / (kk + (one / two).powi(k)));
    }
    if rho == two {
        let kk = T::from_i64(k as i64 + 2);
        return Ok(one.clone() / (two.clone() - kk * (one / two).powi(2 * k + 1)));
    }
    let inv = one.clone() / rho.clone();
    let num = (one.clone() - rho.clone()) * (two.clone() - rho.clone());
    let den = inv.powi(2 * k) + (one.clone() - rho.clone()) * (inv / two.clone()).powi(k)
        - rho.clone() * (two - rho);
    Ok(num / den)
}

/// Blocking probability `2 pi~_K(K-1, K)` of the variant holding at most
/// `2K - 1` customers.
pub fn blocking_probability_odd<T: Scalar>(p: &SymmetricParams<T>) -> Result<T> {
    let k = capacity(p)?;
    if k == 0 {
        return Err(JsqError::param("cap", "the odd variant needs K >= 1"));
    }
    Ok(blocking_shape(&p.rho, 2 * k - 1, k))
}

/// Blocking probability when the only constraint is at most `m` customers in
/// total: even `m` is the model with `K = m/2`, odd `m` the variant with
/// `K = (m+1)/2`.
pub fn blocking_total_constraint<T: Scalar>(rho: T, m: usize) -> Result<T> {
    if m % 2 == 0 {
        blocking_probability(&SymmetricParams::finite(rho, m / 2)?)
    } else {
        blocking_probability_odd(&SymmetricParams::finite(rho, (m + 1) / 2)?)
    }
}

/// `A_K(1) = P(L1 = 0) = 1 - rho (1 - pi_K(K, K))`.
pub fn empty_queue_probability<T: Scalar>(p: &SymmetricParams<T>) -> Result<T> {
    let blocked = blocking_probability(p)?;
    let value = T::one() - p.rho.clone() * (T::one() - blocked);
    let v = value.approx();
    let slack = if T::EXACT { 0.0 } else { 1e-12 };
    if !(v >= -slack && v <= 1.0 + slack) {
        return Err(JsqError::FormulaFault(format!("A_K(1) = {v} lies outside [0, 1]")));
    }
    Ok(value)
}

/// `A_K(1/rho) = sum_k pi_K(0, k) rho^{-k} = rho^{-2K} pi_K(K, K)`.
pub fn a_at_inv_rho<T: Scalar>(p: &SymmetricParams<T>) -> Result<T> {
    let k = capacity(p)?;
    if k == 0 {
        return Ok(T::one());
    }
    let rho = &p.rho;
    let two = T::from_i64(2);
    if *rho <= T::one() {
        let correction = geometric_sum(&(rho.clone() / two.clone()), k - 1);
        Ok(two.clone() / (two * geometric_sum(rho, 2 * k) - correction))
    } else {
        let r = T::one() / rho.clone();
        Ok(r.powi(2 * k) * blocking_probability(p)?)
    }
}

/// Asymptotic regime of the blocking probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    RhoToZero,
    RhoToInfinity,
    CapacityToInfinity,
}

impl std::str::FromStr for Regime {
    type Err = JsqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rho_to_0" => Ok(Regime::RhoToZero),
            "rho_to_inf" => Ok(Regime::RhoToInfinity),
            "K_to_inf" | "k_to_inf" => Ok(Regime::CapacityToInfinity),
            other => Err(JsqError::param("regime", format!("unknown regime {other:?}"))),
        }
    }
}

/// Leading-order term of `pi_K(K, K)` in the given regime.
pub fn blocking_asymptotics(p: &SymmetricParams, regime: Regime) -> Result<f64> {
    let k = capacity(p)?;
    let rho = p.rho;
    let kf = k as f64;
    Ok(match regime {
        Regime::RhoToZero => 2.0 * rho.powf(2.0 * kf),
        Regime::RhoToInfinity => 1.0 - 1.0 / rho,
        Regime::CapacityToInfinity => {
            if rho < 1.0 {
                rho.powf(2.0 * kf) * (1.0 - rho) * (2.0 - rho)
            } else if rho == 1.0 {
                1.0 / (2.0 * kf)
            } else if rho == 2.0 {
                0.5
            } else {
                1.0 - 1.0 / rho
            }
        }
    })
}
