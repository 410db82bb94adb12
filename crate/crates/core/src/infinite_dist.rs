//! Stationary distribution of the symmetric model with unbounded queues.
//!
//! Every mass is a finite sum over the boundary `pi(0, l)`, `l <= 2k + 1`,
//! whose values come from the infinite-product form of `A`.

use crate::cohen_chain::boundary_coeffs_infinite;
use crate::convkernel::ConvTable;
use crate::error::{JsqError, Result};
use crate::finite_dist::{stationary_finite_guarded, BoundarySeq};
use crate::model::{JointDist, SymmetricParams};
use crate::oracle::tail_bound;

/// `max(40, 4 ceil(1 / (1 - rho)))`.
pub fn default_window(rho: f64) -> usize {
    let w = (1.0 / (1.0 - rho)).ceil();
    if w.is_finite() {
        40usize.max(4 * w as usize)
    } else {
        40
    }
}

fn require_ergodic(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(JsqError::NotErgodic(format!("unbounded queues require 0 < rho < 1, got {rho}")))
    }
}

/// `pi(j, k)` for `j, k <= window`.
pub fn stationary_infinite(rho: f64, window: usize) -> Result<JointDist<f64>> {
    require_ergodic(rho)?;
    let b = boundary_coeffs_infinite(rho, 2 * window + 1, None)?;
    from_boundary(rho, &b, window)
}

/// Reconstruction of the window from a given boundary column, which must
/// hold at least `2 window + 2` values.
pub fn from_boundary(rho: f64, b: &BoundarySeq<f64>, window: usize) -> Result<JointDist<f64>> {
    if b.len() < 2 * window + 2 {
        return Err(JsqError::WindowTooSmall(format!(
            "{} boundary values for window {window}, need {}",
            b.len(),
            2 * window + 2
        )));
    }
    let t = ConvTable::symmetric(&rho, window + 1, window + 2);
    let mut d = JointDist::zeros(window, true);
    for k in 1..=window {
        for j in 0..k {
            let mut acc = 0.0;
            for l in k..2 * k {
                let m = l - k + 1;
                acc += b.get(l) * (t.get(m, j) - t.get(m, j + 1));
            }
            d.set(j, k, acc);
        }
    }
    for k in 0..=window {
        let mut acc = 0.0;
        for l in (k + 1)..=(2 * k + 1) {
            acc += b.get(l) * t.get(l - k, k + 1);
        }
        d.set(k, k, -acc / rho);
    }
    Ok(d)
}

/// Diagonal sums `T_k = sum_j pi(j, j + k)` and the residuals of
/// `(1 + 2 rho) T_{k+1} = T_k - pi(0, k)` (`k >= 1`) and
/// `(1 + 2 rho) T_1 = (1 + rho) T_0 - pi(0, 0)`.
#[derive(Clone, Debug)]
pub struct TSeq {
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl TSeq {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Admissible pollution of `T_k` by mass outside the window.
pub const T_SEQ_TOL: f64 = 1e-7;

pub fn t_seq(rho: f64, d: &JointDist<f64>, kmax: usize) -> Result<TSeq> {
    let w = d.capacity();
    if kmax >= w {
        return Err(JsqError::WindowTooSmall(format!("kmax {kmax} needs a window above {kmax}, got {w}")));
    }
    let tail = tail_bound(rho, w);
    if tail > T_SEQ_TOL {
        return Err(JsqError::WindowTooSmall(format!(
            "mass outside a window of {w} may reach {tail:e}"
        )));
    }
    let values: Vec<f64> = (0..=kmax + 1)
        .map(|k| (0..=w - k).map(|j| d.get(j, j + k)).sum())
        .collect();
    let c = 1.0 + 2.0 * rho;
    let mut residuals = vec![c * values[1] - (1.0 + rho) * values[0] + d.get(0, 0)];
    for k in 1..=kmax {
        residuals.push(c * values[k + 1] - values[k] + d.get(0, k));
    }
    Ok(TSeq { values, residuals })
}

/// Ratios `pi(k - offset, k) / ((2 + rho)^{-offset} rho^{2k})` and
/// `pi(k, k) / rho^{2k}` for `k` in `ks`.
#[derive(Clone, Debug)]
pub struct KingmanTable {
    pub ks: Vec<usize>,
    pub offset: usize,
    pub off_diagonal: Vec<f64>,
    pub diagonal: Vec<f64>,
}

impl KingmanTable {
    /// Largest relative change between successive ratios of either column.
    pub fn spread(&self) -> f64 {
        let worst = |v: &[f64]| {
            v.windows(2)
                .map(|w| ((w[1] - w[0]) / w[0]).abs())
                .fold(0.0, f64::max)
        };
        worst(&self.off_diagonal).max(worst(&self.diagonal))
    }
}

pub fn kingman_decay_ratio(rho: f64, d: &JointDist<f64>, ks: &[usize], offset: usize) -> Result<KingmanTable> {
    require_ergodic(rho)?;
    if let Some(&k) = ks.iter().find(|&&k| k > d.capacity() || k < offset) {
        return Err(JsqError::WindowTooSmall(format!(
            "k = {k} with offset {offset} outside a window of {}",
            d.capacity()
        )));
    }
    let off_diagonal = ks
        .iter()
        .map(|&k| d.get(k - offset, k) * (2.0 + rho).powi(offset as i32) / rho.powi(2 * k as i32))
        .collect();
    let diagonal = ks.iter().map(|&k| d.get(k, k) / rho.powi(2 * k as i32)).collect();
    Ok(KingmanTable {
        ks: ks.to_vec(),
        offset,
        off_diagonal,
        diagonal,
    })
}

/// `max |pi_K(j, k) - pi(j, k)|` over `{0..window}^2` for each `K`.
pub fn convergence_finite_to_infinite(rho: f64, caps: &[usize], window: usize) -> Result<Vec<(usize, f64)>> {
    require_ergodic(rho)?;
    let limit = stationary_infinite(rho, window.max(default_window(rho)))?.window(window);
    caps.iter()
        .map(|&k| {
            let d = stationary_finite_guarded(&SymmetricParams::finite(rho, k)?)?;
            let mut gap = 0.0f64;
            for kk in 0..=window {
                for j in 0..=window {
                    gap = gap.max((d.get(j, kk) - limit.get(j, kk)).abs());
                }
            }
            Ok((k, gap))
        })
        .collect()
}

/// Largest residual of the reduced balance equations at states with
/// `k < window`.
pub fn balance_residual_infinite(rho: f64, d: &JointDist<f64>) -> f64 {
    let w = d.capacity();
    let mut worst = 0.0f64;
    for k in 0..w {
        let ind = if k > 0 { 1.0 } else { 0.0 };
        let lhs = (ind + rho) * d.get(k, k);
        let rhs = 2.0 * rho * ind * d.get(k.wrapping_sub(1), k) + d.get(k, k + 1);
        worst = worst.max((lhs - rhs).abs());
        for j in 0..k {
            let jn = if j > 0 { 1.0 } else { 0.0 };
            let lhs = (jn + 1.0 + 2.0 * rho) * d.get(j, k);
            let mut rhs = d.get(j + 1, k) + d.get(j, k + 1);
            if j > 0 {
                rhs += 2.0 * rho * d.get(j - 1, k);
            }
            if k == j + 1 {
                rhs += rho * d.get(j, j);
            }
            worst = worst.max((lhs - rhs).abs());
        }
    }
    worst
}

/// Largest residual of `pi(k, k) = (1/rho) sum_{j <= k} pi(j, k + 1)`.
pub fn diagonal_identity_residual(rho: f64, d: &JointDist<f64>) -> f64 {
    (0..d.capacity())
        .map(|k| {
            let s: f64 = (0..=k).map(|j| d.get(j, k + 1)).sum();
            (d.get(k, k) - s / rho).abs()
        })
        .fold(0.0, f64::max)
}

/// `P(N = n) = (sum_{k <= n} pi(0, k) rho^{-k}) rho^n` for `n <= nmax`.
pub fn total_masses(rho: f64, b: &BoundarySeq<f64>, nmax: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (0..=nmax)
        .map(|n| {
            acc = acc * rho + b.get(n);
            acc
        })
        .collect()
}

/// `(2 - rho)(1 - rho) rho^n`.
pub fn total_envelope(rho: f64, n: usize) -> f64 {
    (2.0 - rho) * (1.0 - rho) * rho.powi(n as i32)
}
