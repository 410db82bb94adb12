//! Stationary distribution of the symmetric model with finite capacity.
//!
//! The boundary column `pi_K(0, k)` is obtained by back-substitution from the
//! blocking probability, then every other mass is a finite sum of boundary
//! values weighted by convolution powers of `g`.

use num_complex::Complex64;

use crate::blocking::{a_at_inv_rho, blocking_probability};
use crate::cohen_chain::{chain_step, phi};
use crate::convkernel::{quadratic_roots, ConvTable};
use crate::error::{JsqError, Result};
use crate::model::{symmetric_generator, JointDist, SymmetricParams};
use crate::oracle::solve_balance_dense;
use crate::scalar::{Field, Scalar};

/// Masses below this are reported as numerical breakdown.
pub const NEGATIVE_MASS_TOL: f64 = 1e-9;

/// Relative size under which a back-substitution pivot counts as zero.
pub const PIVOT_TOL: f64 = 1e-13;

/// Boundary values `pi(0, l)`, `l = 0..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySeq<T = f64> {
    pub values: Vec<T>,
}

impl<T: Field> BoundarySeq<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, l: usize) -> T {
        self.values.get(l).cloned().unwrap_or_else(T::zero)
    }

    pub fn sum(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| acc + v.clone())
    }

    /// `A(y) = sum_l pi(0, l) y^l`.
    pub fn eval(&self, y: &T) -> T {
        self.values.iter().rev().fold(T::zero(), |acc, v| acc * y.clone() + v.clone())
    }
}

impl BoundarySeq<f64> {
    pub fn eval_complex(&self, y: Complex64) -> Complex64 {
        self.values.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, v| acc * y + v)
    }
}

fn table_for<T: Scalar>(p: &SymmetricParams<T>, k: usize) -> ConvTable<T> {
    ConvTable::symmetric(&p.rho, k + 1, k + 2)
}

/// `pi_K(0, k)` for `k = 0..=K` by back-substitution from `pi_K(K, K)`.
pub fn boundary_from_blocking<T: Scalar>(p: &SymmetricParams<T>) -> Result<BoundarySeq<T>> {
    let k = p.cap()?;
    if k == 0 {
        blocking_probability(p)?;
        return Ok(BoundarySeq { values: vec![T::one()] });
    }
    boundary_with_table(p, k, &table_for(p, k))
}

fn boundary_with_table<T: Scalar>(p: &SymmetricParams<T>, cap: usize, t: &ConvTable<T>) -> Result<BoundarySeq<T>> {
    let rho = p.rho.clone();
    let two = T::from_i64(2);
    let two_plus_rho = two.clone() + rho.clone();
    let blocked = blocking_probability(p)?;
    let mut b = vec![T::zero(); cap + 1];
    b[cap] = blocked / (two * rho * (t.get(1, cap - 1) - t.get(1, cap)));
    let coeff = |l: usize, k: usize| t.get(l - k + 1, k + 2) - two_plus_rho.clone() * t.get(l - k + 1, k + 1);
    for k in (0..cap).rev() {
        let pivot = coeff(k, k);
        let mut acc = T::zero();
        let mut scale = pivot.approx().abs();
        for (l, bl) in b.iter().enumerate().take(cap.min(2 * k + 1) + 1).skip(k + 1) {
            let c = coeff(l, k);
            scale = scale.max(c.approx().abs());
            acc = acc + bl.clone() * c;
        }
        if pivot.is_zero() || (!T::EXACT && pivot.approx().abs() < PIVOT_TOL * scale) {
            return Err(JsqError::PivotDegenerate {
                k,
                pivot: pivot.approx().abs(),
            });
        }
        b[k] = -acc / pivot;
    }
    Ok(BoundarySeq { values: b })
}

/// Full distribution from the boundary column.
pub fn reconstruct<T: Scalar>(p: &SymmetricParams<T>, b: &BoundarySeq<T>) -> Result<JointDist<T>> {
    let k = p.cap()?;
    if b.len() != k + 1 {
        return Err(JsqError::param("boundary", format!("expected {} values, got {}", k + 1, b.len())));
    }
    if k == 0 {
        let mut d = JointDist::zeros(0, true);
        d.set(0, 0, blocking_probability(p)?);
        return Ok(d);
    }
    reconstruct_with_table(p, b, &table_for(p, k))
}

fn reconstruct_with_table<T: Scalar>(p: &SymmetricParams<T>, b: &BoundarySeq<T>, t: &ConvTable<T>) -> Result<JointDist<T>> {
    let cap = b.len() - 1;
    let mut d = JointDist::zeros(cap, true);
    for k in 1..=cap {
        for j in 0..k {
            let mut acc = T::zero();
            for l in k..=cap.min(j + k) {
                let m = l - k + 1;
                acc = acc + b.get(l) * (t.get(m, j) - t.get(m, j + 1));
            }
            d.set(j, k, acc);
        }
    }
    let inv_rho = T::one() / p.rho.clone();
    for k in 0..cap {
        let mut acc = T::zero();
        for l in (k + 1)..=cap.min(2 * k + 1) {
            acc = acc + b.get(l) * t.get(l - k, k + 1);
        }
        d.set(k, k, -(inv_rho.clone() * acc));
    }
    d.set(cap, cap, blocking_probability(p)?);
    check_masses(&d)?;
    Ok(d)
}

pub(crate) fn check_masses<T: Scalar>(d: &JointDist<T>) -> Result<()> {
    for (j, k, v) in d.entries() {
        let x = v.approx();
        if !(x >= -NEGATIVE_MASS_TOL) {
            return Err(JsqError::NegativeMass { j, k, value: x });
        }
    }
    Ok(())
}

/// Stationary distribution `pi_K`; the total mass is not re-imposed.
pub fn stationary_finite<T: Scalar>(p: &SymmetricParams<T>) -> Result<JointDist<T>> {
    let k = p.cap()?;
    if k == 0 {
        return reconstruct(p, &boundary_from_blocking(p)?);
    }
    let t = table_for(p, k);
    let b = boundary_with_table(p, k, &t)?;
    reconstruct_with_table(p, &b, &t)
}

/// [`stationary_finite`], replaced by a direct solve when the recursion
/// degenerates or loses positivity.
pub fn stationary_finite_guarded<T: Scalar>(p: &SymmetricParams<T>) -> Result<JointDist<T>> {
    match stationary_finite(p) {
        Err(JsqError::PivotDegenerate { .. }) | Err(JsqError::NegativeMass { .. }) => {
            let full = solve_balance_dense(&symmetric_generator(&p.rho, p.cap()?))?;
            let mut d = JointDist::zeros(full.capacity(), true);
            for (j, k, v) in full.entries() {
                if j <= k {
                    d.set(j, k, v);
                }
            }
            Ok(d)
        }
        other => other,
    }
}

/// `pi_K(0, k)` by interpolating `A_K` at the points `1/rho, 1, 1 + 2 rho, ...`
/// of the root chain, each value obtained from the previous one through the
/// functional equation. Fails when the chain repeats a point among its first
/// `K + 1` terms.
pub fn boundary_via_chain<T: Scalar>(p: &SymmetricParams<T>) -> Result<BoundarySeq<T>> {
    let cap = p.cap()?;
    let rho = p.rho.clone();
    let one = T::one();
    let two = T::from_i64(2);
    let blocked = blocking_probability(p)?;
    let mut points = vec![one.clone() / rho.clone(), one.clone()];
    while points.len() < cap + 1 {
        let n = points.len();
        let next = chain_step(&rho, &points[n - 2], &points[n - 1]);
        points.push(next);
    }
    points.truncate(cap + 1);
    for i in 0..points.len() {
        for j in 0..i {
            if points[i] == points[j] || (!T::EXACT && (points[i].approx() - points[j].approx()).abs() < 1e-9) {
                return Err(JsqError::DomainViolation(format!(
                    "chain repeats the point {} at rho = {}",
                    points[i].approx(),
                    rho.approx()
                )));
            }
        }
    }
    let phi = |y: &T, z: &T| rho.clone() * y.clone() - z.clone() - (one.clone() + rho.clone()) / rho.clone();
    let mut values = vec![a_at_inv_rho(p)?];
    for n in 1..points.len() {
        let (y, z) = (points[n - 1].clone(), points[n].clone());
        let x = (y.clone() + z.clone()) / (two.clone() * (one.clone() + rho.clone()));
        let rhs = (one.clone() + rho.clone()) * x.powi(cap) * (y.clone() - z.clone()) * blocked.clone();
        let denom = phi(&z, &y);
        if denom.is_zero() {
            return Err(JsqError::DomainViolation("phi vanishes along the chain".into()));
        }
        values.push((phi(&y, &z) * values[n - 1].clone() - rhs) / denom);
    }
    Ok(BoundarySeq {
        values: newton_interpolate(&points, &values),
    })
}

/// Monomial coefficients of the polynomial through `(xs[i], ys[i])`.
fn newton_interpolate<T: Field>(xs: &[T], ys: &[T]) -> Vec<T> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i].clone() - dd[i - 1].clone()) / (xs[i].clone() - xs[i - level].clone());
        }
    }
    let mut coeffs = vec![T::zero(); n];
    for i in (0..n).rev() {
        // coeffs <- coeffs * (Y - xs[i]) + dd[i]
        let mut next = vec![T::zero(); n];
        for d in 0..n {
            if d + 1 < n {
                next[d + 1] = next[d + 1].clone() + coeffs[d].clone();
            }
            next[d] = next[d].clone() - coeffs[d].clone() * xs[i].clone();
        }
        next[0] = next[0].clone() + dd[i].clone();
        coeffs = next;
    }
    coeffs
}

fn boundary_of(d: &JointDist<f64>) -> BoundarySeq<f64> {
    BoundarySeq {
        values: (0..=d.capacity()).map(|k| d.get(0, k)).collect(),
    }
}

/// Roots of `p_x(Y) = Y^2 - 2(1+rho) x Y + (1 + 2 rho x) x`.
pub fn px_roots(rho: f64, x: Complex64) -> Result<(Complex64, Complex64)> {
    quadratic_roots(Complex64::new(1.0, 0.0), -2.0 * (1.0 + rho) * x, (1.0 + 2.0 * rho * x) * x)
}

/// Residual of `phi(y,z) A_K(y) - phi(z,y) A_K(z) = (1+rho) x^K (y-z) pi_K(K,K)`
/// with `y, z` the roots of `p_x` and `A_K` read from `d`.
pub fn functional_residual_ak(p: &SymmetricParams, d: &JointDist<f64>, x: Complex64) -> Result<Complex64> {
    let cap = p.cap()?;
    let rho = p.rho;
    let (y, z) = px_roots(rho, x)?;
    let a = boundary_of(d);
    let lhs = phi(rho, y, z) * a.eval_complex(y) - phi(rho, z, y) * a.eval_complex(z);
    let rhs = (1.0 + rho) * x.powu(cap as u32) * (y - z) * d.get(cap, cap);
    Ok(lhs - rhs)
}

/// Residual of the bivariate relation between `F_K(x, y)`, `A_K(y)`,
/// `B_K(x)` and `pi_K(K, K)` at an arbitrary point.
pub fn functional_residual_fk(p: &SymmetricParams, d: &JointDist<f64>, x: Complex64, y: Complex64) -> Result<Complex64> {
    let cap = p.cap()?;
    let rho = p.rho;
    let mut f = Complex64::new(0.0, 0.0);
    let mut bk = Complex64::new(0.0, 0.0);
    for k in 0..=cap {
        for j in 0..=k {
            f += d.get(j, k) * x.powu(j as u32) * y.powu((k - j) as u32);
        }
        bk += d.get(k, k) * x.powu(k as u32);
    }
    let a = boundary_of(d).eval_complex(y);
    let pxy = y * y - 2.0 * (1.0 + rho) * x * y + (1.0 + 2.0 * rho * x) * x;
    let rhs = y * (y - x) * a - (rho * y * y + (1.0 + rho) * y - 1.0 - 2.0 * rho * x) * x * bk
        + rho * x.powu(cap as u32 + 1) * y * (y - 1.0) * d.get(cap, cap);
    Ok(pxy * f - rhs)
}
