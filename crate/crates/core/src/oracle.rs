//! Brute-force ground truth: the stationary vector of a generator by direct
//! elimination, a uniformized power iteration as a second method, and
//! truncation of the infinite model with a geometric tail bound.

use crate::error::{JsqError, Result};
use crate::linalg::BandedSystem;
use crate::model::{symmetric_generator, JointDist, RateMatrix};
use crate::scalar::{Field, Scalar};

/// Largest state space the oracle accepts.
pub const DIMENSION_CAP: usize = 10_000;

/// Stationary vector of `q`, indexed like `q.states()`.
///
/// Solves `Q^T pi = 0` with the last equation replaced by `pi_last = 1`
/// (this keeps the system banded), then normalizes.
pub fn stationary_vector<T: Scalar>(q: &RateMatrix<T>) -> Result<Vec<T>> {
    let n = q.dim();
    if n > DIMENSION_CAP {
        return Err(JsqError::DimensionCap {
            states: n,
            cap: DIMENSION_CAP,
        });
    }
    if n == 0 {
        return Err(JsqError::SingularSystem);
    }
    let mut a = BandedSystem::new(n);
    for v in 0..n {
        a.add(v, v, -q.exit_rate(v));
        for (w, r) in q.row(v) {
            a.add(*w, v, r.clone());
        }
    }
    let last = n - 1;
    a.clear_row(last);
    a.add(last, last, T::one());
    let mut rhs = vec![T::zero(); n];
    rhs[last] = T::one();
    let x = a.solve(rhs)?;
    let total = x.iter().fold(T::zero(), |acc, p| acc + p.clone());
    if total.is_zero() {
        return Err(JsqError::SingularSystem);
    }
    Ok(x.into_iter().map(|p| p / total.clone()).collect())
}

/// Stationary distribution of `q` as a full (unmirrored) table.
pub fn solve_balance_dense<T: Scalar>(q: &RateMatrix<T>) -> Result<JointDist<T>> {
    let pi = stationary_vector(q)?;
    Ok(JointDist::from_state_vector(q, &pi))
}

/// `max_w |(pi Q)(w)|`.
pub fn balance_residual<T: Scalar>(q: &RateMatrix<T>, pi: &[T]) -> f64 {
    q.apply_left(pi).iter().map(|r| r.approx().abs()).fold(0.0, f64::max)
}

/// Stationary vector by power iteration on the uniformized chain
/// `P = I + Q / Lambda`, `Lambda = max exit rate + 1`.
pub fn power_iteration(q: &RateMatrix<f64>, tol: f64, max_iter: usize) -> Vec<f64> {
    let n = q.dim();
    let lambda = q.max_exit_rate() + 1.0;
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        let flow = q.apply_left(&pi);
        let mut change = 0.0f64;
        for (p, f) in pi.iter_mut().zip(&flow) {
            let step = f / lambda;
            *p += step;
            change = change.max(step.abs());
        }
        if change < tol {
            break;
        }
    }
    let total: f64 = pi.iter().sum();
    pi.iter().map(|p| p / total).collect()
}

/// `sum_{n > k} (2 - rho)(1 - rho) rho^n`: a bound on the stationary mass of
/// the infinite model outside `{0..k}^2`.
pub fn tail_bound(rho: f64, k: usize) -> f64 {
    (2.0 - rho) * rho.powi(k as i32 + 1)
}

/// The finite model at capacity `k_trunc` as a stand-in for the infinite
/// model, together with the tail bound of the discarded mass.
pub fn truncated_infinite(rho: f64, k_trunc: usize) -> Result<(JointDist<f64>, f64)> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(JsqError::NotErgodic(format!("truncation requires 0 < rho < 1, got {rho}")));
    }
    let q = symmetric_generator(&rho, k_trunc);
    let d = solve_balance_dense(&q)?;
    Ok((d, tail_bound(rho, k_trunc)))
}

/// Boundary column `pi(0, k)` of a table.
pub fn boundary_of<T: Field>(d: &JointDist<T>) -> Vec<T> {
    (0..=d.capacity()).map(|k| d.get(0, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{asymmetric_generator, AsymmetricParams, Capacity};
    use num_rational::BigRational;

    #[test]
    fn four_state_hand_solve() {
        let d = solve_balance_dense(&symmetric_generator(&1.0, 1)).unwrap();
        for (j, k, p) in [(0, 0, 0.2), (0, 1, 0.2), (1, 0, 0.2), (1, 1, 0.4)] {
            assert!((d.get(j, k) - p).abs() < 1e-15);
        }
        let exact = solve_balance_dense(&symmetric_generator(&BigRational::from_i64(1), 1)).unwrap();
        assert_eq!(exact.get(1, 1), BigRational::from_ratio(2, 5));
    }

    #[test]
    fn single_state() {
        let d = solve_balance_dense(&symmetric_generator(&0.7, 0)).unwrap();
        assert_eq!(d.get(0, 0), 1.0);
    }

    #[test]
    fn asymmetric_vector_is_positive() {
        let p = AsymmetricParams::new(0.5, 1.0, 2.0, 0.3, Capacity::Finite(1)).unwrap();
        let pi = stationary_vector(&asymmetric_generator(&p, 1)).unwrap();
        assert!(pi.iter().all(|&x| x > 0.0));
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_solution_is_symmetric_and_balanced() {
        for rho in [0.1, 1.0, 3.0] {
            let q = symmetric_generator(&rho, 8);
            let pi = stationary_vector(&q).unwrap();
            assert!(balance_residual(&q, &pi) < 1e-12 * q.max_exit_rate());
            let d = JointDist::from_state_vector(&q, &pi);
            for (j, k, p) in d.entries() {
                assert!((p - d.get(k, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn power_iteration_agrees() {
        for rho in [0.5, 1.0, 2.0] {
            let q = symmetric_generator(&rho, 5);
            let direct = stationary_vector(&q).unwrap();
            let iter = power_iteration(&q, 1e-15, 2_000_000);
            let gap = direct.iter().zip(&iter).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(gap < 1e-8, "rho {rho}: {gap}");
        }
    }

    #[test]
    fn truncation_tails() {
        assert!(tail_bound(0.5, 60) < 1e-17);
        let (d40, _) = truncated_infinite(0.5, 40).unwrap();
        let (d60, _) = truncated_infinite(0.5, 60).unwrap();
        assert!((d40.get(0, 0) - d60.get(0, 0)).abs() < 1e-10);
        assert!(truncated_infinite(1.0, 10).is_err());
    }

    #[test]
    fn dimension_cap() {
        let q = symmetric_generator(&0.5, 100);
        assert!(matches!(stationary_vector(&q), Err(JsqError::DimensionCap { .. })));
    }
}
