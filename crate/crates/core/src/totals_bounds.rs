//! Law of the total number of customers, its mean and bounds on it, and
//! comparison with single- and two-server queues sharing the same traffic.

use std::io::Write;

use serde::Serialize;

use crate::blocking::blocking_probability;
use crate::error::{JsqError, Result};
use crate::finite_dist::boundary_from_blocking;
use crate::model::{JointDist, SymmetricParams};
use crate::scalar::{geometric_sum, Scalar};

/// `P(N_K = n)`, `n = 0..=2K`.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalDist<T = f64> {
    pub rho: T,
    pub capacity: usize,
    pub masses: Vec<T>,
}

impl<T: Scalar> TotalDist<T> {
    pub fn get(&self, n: usize) -> T {
        self.masses.get(n).cloned().unwrap_or_else(T::zero)
    }

    pub fn sum(&self) -> T {
        self.masses.iter().fold(T::zero(), |a, m| a + m.clone())
    }

    pub fn mean(&self) -> T {
        self.masses
            .iter()
            .enumerate()
            .fold(T::zero(), |a, (n, m)| a + T::from_i64(n as i64) * m.clone())
    }

    /// `pi_K(K, K) rho^{n - 2K}`.
    pub fn envelope(&self, n: usize) -> Result<T> {
        let blocked = self.masses[2 * self.capacity].clone();
        let r = T::one() / self.rho.clone();
        Ok(blocked * r.powi(2 * self.capacity - n.min(2 * self.capacity)))
    }
}

/// `P(N_K = n) = sum_{k <= min(n, K)} pi_K(0, k) rho^{n-k}`.
pub fn total_dist<T: Scalar>(p: &SymmetricParams<T>) -> Result<TotalDist<T>> {
    let cap = p.cap()?;
    let b = boundary_from_blocking(p)?;
    let masses = (0..=2 * cap)
        .map(|n| {
            (0..=n.min(cap)).fold(T::zero(), |acc, k| acc + b.get(k) * p.rho.powi(n - k))
        })
        .collect();
    Ok(TotalDist {
        rho: p.rho.clone(),
        capacity: cap,
        masses,
    })
}

/// `P(N_K = n)` aggregated from a joint table.
pub fn totals_of<T: Scalar>(d: &JointDist<T>) -> Vec<T> {
    let mut out = vec![T::zero(); 2 * d.capacity() + 1];
    for (j, k, v) in d.entries() {
        out[j + k] = out[j + k].clone() + v;
    }
    out
}

pub fn mean_total<T: Scalar>(p: &SymmetricParams<T>) -> Result<T> {
    Ok(total_dist(p)?.mean())
}

/// Blocking probability `rho^K / sum_{k<=K} rho^k` of an M/M/1/K queue
/// with load `rho`.
pub fn mm1k_blocking<T: Scalar>(rho: &T, k: usize) -> Result<T> {
    positive(rho)?;
    if *rho <= T::one() {
        Ok(rho.powi(k) / geometric_sum(rho, k))
    } else {
        Ok(T::one() / geometric_sum(&(T::one() / rho.clone()), k))
    }
}

/// Blocking probability `2 rho^{2K} / (2 sum_{k<=2K} rho^k - 1)` of the
/// M/M/2/2K queue with arrival rate `2 rho` and unit service rates.
pub fn mm2_2k_blocking<T: Scalar>(rho: &T, k: usize) -> Result<T> {
    positive(rho)?;
    let two = T::from_i64(2);
    if *rho <= T::one() {
        Ok(two.clone() * rho.powi(2 * k) / (two * geometric_sum(rho, 2 * k) - T::one()))
    } else {
        let r = T::one() / rho.clone();
        Ok(two.clone() / (two * geometric_sum(&r, 2 * k) - r.powi(2 * k)))
    }
}

fn positive<T: Scalar>(rho: &T) -> Result<()> {
    if *rho > T::zero() {
        Ok(())
    } else {
        Err(JsqError::param("rho", "must be positive"))
    }
}

/// `[nu_{2K}(2K), nu'(2K), pi_K(K, K), nu_K(K)]`, nondecreasing by coupling.
pub fn order_chain(rho: f64, k: usize) -> Result<[f64; 4]> {
    Ok([
        mm1k_blocking(&rho, 2 * k)?,
        mm2_2k_blocking(&rho, k)?,
        blocking_probability(&SymmetricParams::finite(rho, k)?)?,
        mm1k_blocking(&rho, k)?,
    ])
}

/// `(lower, upper)` bounds on `E(N_K)`: the M/M/2/2K mean and the mean of the
/// geometric envelope of the total law.
pub fn mean_total_bounds<T: Scalar>(p: &SymmetricParams<T>) -> Result<(T, T)> {
    let rho = p.rho.clone();
    positive(&rho)?;
    let k = p.cap()?;
    let one = T::one();
    let two = T::from_i64(2);
    let kf = T::from_i64(k as i64);
    if rho == one {
        let top = kf.clone() * (two.clone() * kf.clone() + one.clone());
        let lower = top.clone() / (two.clone() * kf.clone() + one.clone() / two.clone());
        let upper = top / (two.clone() * kf + (one / two).powi(k));
        return Ok((lower, upper));
    }
    let blocked = blocking_probability(p)?;
    let r2k = rho.powi(2 * k);
    let om = one.clone() - rho.clone();
    let lower = two.clone() * rho.clone() * (one.clone() - (one.clone() + two.clone() * kf.clone() * om.clone()) * r2k.clone())
        / (om.clone() * (one.clone() + rho.clone() - two.clone() * rho.clone() * r2k.clone()));
    let upper = (two * kf * (rho.clone() - one.clone()) + one.clone() / r2k - one) * rho * blocked / (om.clone() * om);
    Ok((lower, upper))
}

/// `(2 rho / (1 - rho^2), rho (2 - rho) / (1 - rho))` for unbounded queues.
pub fn mean_total_bounds_infinite(rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(JsqError::NotErgodic(format!("unbounded queues require 0 < rho < 1, got {rho}")));
    }
    Ok((2.0 * rho / (1.0 - rho * rho), rho * (2.0 - rho) / (1.0 - rho)))
}

/// Idle probability of the serve-the-longest-queue dual, equal to `pi_K(K, K)`.
pub fn slq_idle_probability<T: Scalar>(p: &SymmetricParams<T>) -> Result<T> {
    blocking_probability(p)
}

/// One row of the blocking-ratio table.
#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub rho: f64,
    pub jsq: f64,
    pub mm1k: f64,
    pub mm2_2k: f64,
    pub mm1k_ratio: f64,
    pub mm2_2k_ratio: f64,
}

pub fn ratio_row(rho: f64, k: usize) -> Result<RatioRow> {
    let [_, nu_prime, pi, nu] = order_chain(rho, k)?;
    Ok(RatioRow {
        rho,
        jsq: pi,
        mm1k: nu,
        mm2_2k: nu_prime,
        mm1k_ratio: nu / pi,
        mm2_2k_ratio: nu_prime / pi,
    })
}

pub fn ratio_table(k: usize, grid: &[f64]) -> Result<Vec<RatioRow>> {
    grid.iter().map(|&rho| ratio_row(rho, k)).collect()
}

pub fn write_ratio_csv<W: Write>(rows: &[RatioRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `n` evenly spaced points over `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Parses `lo:hi:n`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || JsqError::Parse(format!("grid must look like lo:hi:n, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi >= lo) || n == 0 {
        return Err(bad());
    }
    Ok(linear_grid(lo, hi, n))
}

/// A supremum estimate and the interval it is proven to lie in.
#[derive(Clone, Debug, Serialize)]
pub struct GapEstimate {
    pub sup: f64,
    pub argmax: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Rounding slack of [`GapEstimate::within`].
pub const GAP_SLACK: f64 = 1e-14;

impl GapEstimate {
    pub fn within(&self) -> bool {
        self.lower - GAP_SLACK <= self.sup && self.sup <= self.upper + GAP_SLACK
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub capacity: usize,
    pub mm1k_gap: GapEstimate,
    pub mm2_2k_gap: GapEstimate,
    pub rows: Vec<RatioRow>,
}

/// Default search span for the suprema over `rho`.
pub const GAP_SPAN: (f64, f64) = (0.01, 6.0);

/// Suprema over `rho` of `nu_K(K) - pi_K(K, K)` and `pi_K(K, K) - nu'(2K)`:
/// best point of the grid and of `rho = 1`, refined by golden-section search
/// between its neighbours.
pub fn uniform_gap_report(k: usize, grid: &[f64]) -> Result<GapReport> {
    if k == 0 {
        return Err(JsqError::param("cap", "must be at least 1"));
    }
    let rows = ratio_table(k, grid)?;
    let kf = k as f64;
    let tk = 0.5f64.powi(k as i32);
    let nu_gap = |rho: f64| order_chain(rho, k).map(|c| c[3] - c[2]).unwrap_or(f64::NEG_INFINITY);
    let prime_gap = |rho: f64| order_chain(rho, k).map(|c| c[2] - c[1]).unwrap_or(f64::NEG_INFINITY);
    let (s1, a1) = maximize(&nu_gap, grid);
    let (s2, a2) = maximize(&prime_gap, grid);
    Ok(GapReport {
        capacity: k,
        mm1k_gap: GapEstimate {
            sup: s1,
            argmax: a1,
            lower: (kf + tk - 1.0) / ((kf + 1.0) * (2.0 * kf + tk)),
            upper: 1.0 / (kf + 1.0),
        },
        mm2_2k_gap: GapEstimate {
            sup: s2,
            argmax: a2,
            lower: (0.5 - tk) / ((2.0 * kf + 0.5) * (2.0 * kf + tk)),
            upper: 2.0 / (kf * kf),
        },
        rows,
    })
}

fn maximize(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> (f64, f64) {
    let mut pts: Vec<f64> = grid.to_vec();
    pts.push(1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let (best, _) = pts
        .iter()
        .enumerate()
        .map(|(i, &x)| (i, f(x)))
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let lo = pts[best.saturating_sub(1)];
    let hi = pts[(best + 1).min(pts.len() - 1)];
    let (x, v) = golden_section(f, lo, hi, 1e-10);
    if v >= f(pts[best]) {
        (v, x)
    } else {
        (f(pts[best]), pts[best])
    }
}

fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    (x, f(x))
}
