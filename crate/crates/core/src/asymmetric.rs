//! Two queues with different service rates and a biased tie-break.
//!
//! The whole distribution is a finite combination of the two boundary
//! sequences `pi(k, 0)` and `pi(0, k)`, weighted by convolution powers of the
//! kernels `g_1`, `g_2`. The boundaries themselves are only characterized
//! implicitly, so they are read off a direct solve and the functional
//! relations they satisfy are checked as residuals.

use num_complex::Complex64;

use crate::convkernel::{asym_roots, quadratic_roots, ConvTable, Kernel};
use crate::error::{JsqError, Result};
use crate::model::{asymmetric_generator, AsymmetricParams, Capacity, JointDist};
use crate::oracle::{solve_balance_dense, DIMENSION_CAP};

/// Largest capacity handed to the direct solve by default.
pub const ORACLE_CAP: usize = 60;

/// Kernels `g_1`, `g_2` with their characteristic roots and convolution
/// tables.
#[derive(Clone, Debug)]
pub struct AsymKernel {
    pub xi1: (f64, f64),
    pub xi2: (f64, f64),
    pub g1: ConvTable<f64>,
    pub g2: ConvTable<f64>,
}

impl AsymKernel {
    pub fn build(p: &AsymmetricParams, kmax: usize, jmax: usize) -> Result<Self> {
        let roots = |lead: f64| -> Result<(f64, f64)> {
            let s = 2.0 * p.lambda + p.mu1 + p.mu2;
            let (a, b) = quadratic_roots(
                Complex64::new(lead, 0.0),
                Complex64::new(-s, 0.0),
                Complex64::new(2.0 * p.lambda, 0.0),
            )?;
            Ok((a.re, b.re))
        };
        Ok(AsymKernel {
            xi1: roots(p.mu2)?,
            xi2: roots(p.mu1)?,
            g1: ConvTable::build(Kernel::asymmetric(p, 1)?, kmax, jmax),
            g2: ConvTable::build(Kernel::asymmetric(p, 2)?, kmax, jmax),
        })
    }
}

/// `row[k] = pi(k, 0)` and `col[k] = pi(0, k)`, `k = 0..=K`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymBoundaries {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

impl AsymBoundaries {
    pub fn of(d: &JointDist<f64>) -> Self {
        let n = d.capacity();
        AsymBoundaries {
            row: (0..=n).map(|k| d.get(k, 0)).collect(),
            col: (0..=n).map(|k| d.get(0, k)).collect(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.row.len() - 1
    }

    /// `A_1(y) = sum_k pi(k, 0) y^k`.
    pub fn a1(&self, y: Complex64) -> Complex64 {
        horner(&self.row, y)
    }

    /// `A_2(y) = sum_k pi(0, k) y^k`.
    pub fn a2(&self, y: Complex64) -> Complex64 {
        horner(&self.col, y)
    }
}

fn horner(c: &[f64], y: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &v| acc * y + v)
}

/// Boundaries of the finite model from a direct solve.
pub fn asym_boundaries_oracle(p: &AsymmetricParams) -> Result<AsymBoundaries> {
    asym_boundaries_oracle_capped(p, ORACLE_CAP)
}

pub fn asym_boundaries_oracle_capped(p: &AsymmetricParams, cap_limit: usize) -> Result<AsymBoundaries> {
    let cap = p.cap()?;
    if cap > cap_limit {
        return Err(JsqError::DimensionCap {
            states: (cap + 1) * (cap + 1),
            cap: (cap_limit + 1) * (cap_limit + 1),
        });
    }
    Ok(AsymBoundaries::of(&asym_oracle(p, cap)?))
}

fn asym_oracle(p: &AsymmetricParams, cap: usize) -> Result<JointDist<f64>> {
    let states = (cap + 1) * (cap + 1);
    if states > DIMENSION_CAP {
        return Err(JsqError::DimensionCap {
            states,
            cap: DIMENSION_CAP,
        });
    }
    solve_balance_dense(&asymmetric_generator(p, cap))
}

/// Boundaries of the unbounded model, read off the model truncated at
/// `k_trunc`.
pub fn asym_boundaries_truncated(p: &AsymmetricParams, k_trunc: usize) -> Result<AsymBoundaries> {
    if !p.capacity.is_infinite() {
        return Err(JsqError::param("cap", "truncation applies to unbounded queues"));
    }
    let mut q = p.clone();
    q.capacity = Capacity::Finite(k_trunc);
    Ok(AsymBoundaries::of(&asym_oracle(&q, k_trunc)?))
}

/// Full distribution of the finite model from its two boundary sequences.
pub fn asym_reconstruct(p: &AsymmetricParams, b: &AsymBoundaries) -> Result<JointDist<f64>> {
    let cap = p.cap()?;
    if b.row.len() != cap + 1 || b.col.len() != cap + 1 {
        return Err(JsqError::param("boundary", format!("expected {} values per side", cap + 1)));
    }
    let mut d = JointDist::zeros(cap, false);
    if cap == 0 {
        d.set(0, 0, 1.0);
        return Ok(d);
    }
    let t = AsymKernel::build(p, cap + 1, cap + 2)?;
    fill(p, b, &t, &mut d, cap, |k| cap.min(2 * k + 1), |k| cap.min(2 * k));
    let (g1, g2) = (&t.g1, &t.g2);
    let kk = p.mu2 / p.mu1 * b.row[cap] * (g1.get(1, cap - 1) - g1.get(1, cap))
        + p.mu1 / p.mu2 * b.col[cap] * (g2.get(1, cap - 1) - g2.get(1, cap));
    d.set(cap, cap, 2.0 * p.lambda / (p.mu1 + p.mu2) * kk);
    crate::finite_dist::check_masses(&d)?;
    Ok(d)
}

/// `pi` on `{0..window}^2` for unbounded queues from boundary values up to
/// index `2 window + 1` at least.
pub fn asym_reconstruct_window(p: &AsymmetricParams, b: &AsymBoundaries, window: usize) -> Result<JointDist<f64>> {
    if b.capacity() < 2 * window + 1 {
        return Err(JsqError::WindowTooSmall(format!(
            "boundaries up to {} for window {window}, need {}",
            b.capacity(),
            2 * window + 1
        )));
    }
    let t = AsymKernel::build(p, window + 2, window + 2)?;
    let mut d = JointDist::zeros(window, false);
    fill(p, b, &t, &mut d, window + 1, |k| 2 * k + 1, |k| 2 * k);
    Ok(d)
}

/// Off-diagonal masses with `k < kend` and diagonal masses with `k < kend`,
/// summing boundary indices up to `diag_top(k)` and `off_top(k)`.
fn fill(
    p: &AsymmetricParams,
    b: &AsymBoundaries,
    t: &AsymKernel,
    d: &mut JointDist<f64>,
    kend: usize,
    diag_top: impl Fn(usize) -> usize,
    off_top: impl Fn(usize) -> usize,
) {
    let side = d.capacity();
    let (g1, g2) = (&t.g1, &t.g2);
    for k in 1..=side {
        for j in 0..k {
            let (mut s1, mut s2) = (0.0, 0.0);
            for l in k..=off_top(k).min(j + k) {
                let m = l - k + 1;
                s1 += b.row[l] * (g1.get(m, j) - g1.get(m, j + 1));
                s2 += b.col[l] * (g2.get(m, j) - g2.get(m, j + 1));
            }
            d.set(k, j, p.mu2 / p.mu1 * s1);
            d.set(j, k, p.mu1 / p.mu2 * s2);
        }
    }
    for k in 0..kend.min(side + 1) {
        let mut acc = 0.0;
        for l in (k + 1)..=diag_top(k) {
            acc += p.mu2 * b.row[l] * g1.get(l - k, k + 1) + p.mu1 * b.col[l] * g2.get(l - k, k + 1);
        }
        d.set(k, k, -acc / (2.0 * p.lambda));
    }
}

/// Radius of the disk of `x` where the functional relations are checked:
/// `0.2 min(1, mu1 / (2 lambda), mu2 / (2 lambda))`.
pub fn small_x_radius(p: &AsymmetricParams) -> f64 {
    0.2 * 1f64.min(p.mu1 / (2.0 * p.lambda)).min(p.mu2 / (2.0 * p.lambda))
}

/// Residuals (left minus right) of the two relations linking `A_1` at the
/// roots of `p_{x,1}` and `A_2` at the roots of `p_{x,2}`.
pub fn asym_functional_residual(p: &AsymmetricParams, d: &JointDist<f64>, x: Complex64) -> Result<(Complex64, Complex64)> {
    let r = small_x_radius(p);
    if x.norm() > r {
        return Err(JsqError::DomainViolation(format!("|x| = {} exceeds {r}", x.norm())));
    }
    let cap = d.capacity();
    let b = AsymBoundaries::of(d);
    let (y1, z1) = asym_roots(x, 1, p)?;
    let (y2, z2) = asym_roots(x, 2, p)?;
    if p.capacity.is_infinite() && [y1, z1, y2, z2].iter().any(|y| y.norm() >= 1.0) {
        return Err(JsqError::DomainViolation("roots leave the unit disk".into()));
    }
    let (a1y, a1z, a2y, a2z) = (b.a1(y1), b.a1(z1), b.a2(y2), b.a2(z2));
    let lam = p.lambda;
    let d1 = (a1y - a1z) / (y1 - z1);
    let d2 = (a2y - a2z) / (y2 - z2);
    let mixed = p.mu1 * d1 + p.mu2 * d2;
    let xk = x.powu(cap as u32) * d.get(cap, cap);
    let lhs1 = p.mu2 / (y1 - z1) * ((y1 - x) * a1y - (z1 - x) * a1z);
    let rhs1 = p.mu2 * xk + (p.mu2 + 2.0 * p.p1 * lam * x) / (2.0 * lam) * mixed;
    let lhs2 = p.mu1 / (y2 - z2) * ((y2 - x) * a2y - (z2 - x) * a2z);
    let rhs2 = p.mu1 * xk + (p.mu1 + 2.0 * p.p2() * lam * x) / (2.0 * lam) * mixed;
    Ok((lhs1 - rhs1, lhs2 - rhs2))
}

/// `|mu2 A_1(1) + mu1 A_2(1) - (mu1 + mu2) + 2 lambda (1 - pi(K, K))|`.
pub fn asym_normalization_check(p: &AsymmetricParams, d: &JointDist<f64>) -> f64 {
    let b = AsymBoundaries::of(d);
    let cap = d.capacity();
    let a1: f64 = b.row.iter().sum();
    let a2: f64 = b.col.iter().sum();
    (p.mu2 * a1 + p.mu1 * a2 - (p.mu1 + p.mu2) + 2.0 * p.lambda * (1.0 - d.get(cap, cap))).abs()
}

/// Largest residual of
/// `2 lambda pi(k, k) = mu1 sum_{j<=k} pi(k+1, j) + mu2 sum_{j<=k} pi(j, k+1)`.
pub fn asym_diagonal_residual(p: &AsymmetricParams, d: &JointDist<f64>) -> f64 {
    (0..d.capacity())
        .map(|k| {
            let s1: f64 = (0..=k).map(|j| d.get(k + 1, j)).sum();
            let s2: f64 = (0..=k).map(|j| d.get(j, k + 1)).sum();
            (2.0 * p.lambda * d.get(k, k) - p.mu1 * s1 - p.mu2 * s2).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite_dist::stationary_finite;
    use crate::model::SymmetricParams;
    use crate::oracle::{balance_residual, stationary_vector};

    fn params(l: f64, m1: f64, m2: f64, p1: f64, k: usize) -> AsymmetricParams {
        AsymmetricParams::new(l, m1, m2, p1, Capacity::Finite(k)).unwrap()
    }

    fn sets(k: usize) -> Vec<AsymmetricParams> {
        vec![
            params(0.5, 1.0, 2.0, 0.5, k),
            params(0.7, 1.0, 1.0, 0.5, k),
            params(1.2, 0.8, 1.5, 0.3, k),
            params(0.3, 2.0, 0.5, 0.9, k),
            params(2.0, 1.0, 1.0, 0.2, k),
        ]
    }

    #[test]
    fn kernel_invariants() {
        let p = params(0.5, 1.0, 2.0, 0.5, 3);
        let t = AsymKernel::build(&p, 3, 6).unwrap();
        assert_eq!(t.g1.get(1, 0), 0.0);
        assert_eq!(t.g1.get(1, 1), -0.5);
        assert_eq!(t.g2.get(1, 1), -2.0);
        let (a, b) = t.xi1;
        assert!((2.0 * a * a - 4.0 * a + 1.0).abs() < 1e-12 && (2.0 * b * b - 4.0 * b + 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_oracle() {
        for k in 1..=6 {
            for p in sets(k) {
                let o = solve_balance_dense(&asymmetric_generator(&p, k)).unwrap();
                let b = asym_boundaries_oracle(&p).unwrap();
                let d = asym_reconstruct(&p, &b).unwrap();
                assert!(d.max_abs_diff(&o) < 1e-9, "{p:?}");
                let q = asymmetric_generator(&p, k);
                assert!(balance_residual(&q, &d.to_state_vector(&q)) < 1e-9);
                assert!(asym_normalization_check(&p, &o) < 1e-10);
                assert!(asym_diagonal_residual(&p, &o) < 1e-10);
            }
        }
    }

    #[test]
    fn symmetric_reduction() {
        for rho in [0.4, 1.0, 2.5] {
            let s = SymmetricParams::finite(rho, 5).unwrap();
            let p = AsymmetricParams::from_symmetric(&s);
            let b = asym_boundaries_oracle(&p).unwrap();
            assert_eq!(b.row.len(), 6);
            for (r, c) in b.row.iter().zip(&b.col) {
                assert!((r - c).abs() < 1e-12);
            }
            let d = asym_reconstruct(&p, &b).unwrap();
            assert!(d.max_abs_diff(&stationary_finite(&s).unwrap()) < 1e-10);
        }
        let p = params(0.5, 1.0, 1.0, 0.5, 0);
        let b = asym_boundaries_oracle(&p).unwrap();
        assert_eq!((b.row.clone(), b.col.clone()), (vec![1.0], vec![1.0]));
        assert_eq!(asym_reconstruct(&p, &b).unwrap().get(0, 0), 1.0);
    }

    #[test]
    fn functional_relations() {
        for p in sets(4) {
            let q = asymmetric_generator(&p, 4);
            let d = JointDist::from_state_vector(&q, &stationary_vector(&q).unwrap());
            let r = small_x_radius(&p);
            for t in 1..=10 {
                let x = Complex64::from_polar(r * t as f64 / 10.0, 0.7 * t as f64);
                let (e1, e2) = asym_functional_residual(&p, &d, x).unwrap();
                assert!(e1.norm() < 1e-9 && e2.norm() < 1e-9, "{p:?} x {x}: {e1} {e2}");
            }
            let mut bad = d.clone();
            bad.set(0, 1, d.get(0, 1) + 1e-3);
            let (e1, e2) = asym_functional_residual(&p, &bad, Complex64::new(0.05, 0.0)).unwrap();
            assert!(e1.norm().max(e2.norm()) > 1e-5);
        }
        let p = params(0.5, 1.0, 2.0, 0.5, 3);
        let d = solve_balance_dense(&asymmetric_generator(&p, 3)).unwrap();
        assert!(asym_functional_residual(&p, &d, Complex64::new(0.5, 0.0)).is_err());
    }

    #[test]
    fn infinite_window() {
        let p = AsymmetricParams::new(0.6, 1.0, 1.5, 0.4, Capacity::Infinite).unwrap();
        let b = asym_boundaries_truncated(&p, 50).unwrap();
        let d = asym_reconstruct_window(&p, &b, 8).unwrap();
        let mut q = p.clone();
        q.capacity = Capacity::Finite(50);
        let o = solve_balance_dense(&asymmetric_generator(&q, 50)).unwrap();
        assert!(d.max_abs_diff(&o.window(8)) < 1e-9);
    }
}
