//! Chains of coupled roots on the curve `{(y, z): y, z roots of some p_x}`,
//! the distinguished chains `u` and `v`, and the infinite-product form of the
//! boundary generating function `A(y)` of the infinite model.

use num_complex::Complex64;

use crate::error::{JsqError, Result};
use crate::finite_dist::BoundarySeq;
use crate::scalar::Field;

/// `(a, b) = ((1+rho) / (2(1+rho^2)), 1 / (2 sqrt(1+rho^2)))`.
pub fn ellipse_constants(rho: f64) -> (f64, f64) {
    let s = 1.0 + rho * rho;
    ((1.0 + rho) / (2.0 * s), 1.0 / (2.0 * s.sqrt()))
}

/// Growth ratio `(a + b) / (a - b)` of a chain.
pub fn growth_ratio(rho: f64) -> f64 {
    let (a, b) = ellipse_constants(rho);
    (a + b) / (a - b)
}

/// One step of `y(n+1) = 2 (1+rho+rho^2)/rho y(n) - y(n-1) - (1+rho)/rho`.
/// The recursion is its own reverse, so this also steps backwards.
pub fn chain_step<T: Field>(rho: &T, prev: &T, cur: &T) -> T {
    let one = T::one();
    let two = T::from_i64(2);
    let c = two * (one.clone() + rho.clone() + rho.clone() * rho.clone()) / rho.clone();
    let d = (one + rho.clone()) / rho.clone();
    c * cur.clone() - prev.clone() - d
}

/// `phi(y, z) = rho y - z - (1 + rho) / rho`.
pub fn phi(rho: f64, y: Complex64, z: Complex64) -> Complex64 {
    rho * y - z - (1.0 + rho) / rho
}

/// Whether `2(1+rho)^2 y z = (y+z)(1 + rho + rho (y+z))` within `tol`
/// relative to the size of the terms.
pub fn on_curve(rho: f64, y: Complex64, z: Complex64, tol: f64) -> bool {
    let s = y + z;
    let lhs = 2.0 * (1.0 + rho).powi(2) * y * z;
    let rhs = s * (1.0 + rho + rho * s);
    let scale = lhs.norm().max(rhs.norm()).max(1.0);
    (lhs - rhs).norm() <= tol * scale
}

/// The two `z` with `(y, z)` on the curve.
pub fn partners(rho: f64, y: Complex64) -> Result<(Complex64, Complex64)> {
    let a = Complex64::new(rho, 0.0);
    let b = (1.0 + rho) + 2.0 * rho * y - 2.0 * (1.0 + rho).powi(2) * y;
    let c = (1.0 + rho) * y + rho * y * y;
    crate::convkernel::quadratic_roots(a, b, c)
}

/// `y(n)` for `n` in `[-N, N]` seeded by `y(0), y(1)`, with the closed form
/// `a + alpha r^n + beta r^{-n}`, `r = (a+b)/(a-b)`.
#[derive(Clone, Debug)]
pub struct ChainWindow {
    pub rho: f64,
    pub half_width: usize,
    pub values: Vec<Complex64>,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl ChainWindow {
    /// `y(n)`, `|n| <= N`.
    pub fn get(&self, n: i64) -> Complex64 {
        self.values[(n + self.half_width as i64) as usize]
    }

    pub fn closed_form(&self, n: i64) -> Complex64 {
        let (a, _) = ellipse_constants(self.rho);
        let r = growth_ratio(self.rho);
        a + self.alpha * r.powi(n as i32) + self.beta * r.powi(-n as i32)
    }

    /// Largest relative gap between the recursion and the closed form.
    pub fn closed_form_gap(&self) -> f64 {
        let n = self.half_width as i64;
        (-n..=n)
            .map(|i| {
                let v = self.get(i);
                (v - self.closed_form(i)).norm() / v.norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }

    /// `x(n) = (y(n) + y(n+1)) / (2 (1 + rho))`, the parameter whose `p_x`
    /// has roots `y(n), y(n+1)`.
    pub fn x(&self, n: i64) -> Complex64 {
        (self.get(n) + self.get(n + 1)) / (2.0 * (1.0 + self.rho))
    }
}

/// `(alpha, beta)` of the chain through `(y, z)`.
pub fn chain_coefficients(rho: f64, y: Complex64, z: Complex64) -> (Complex64, Complex64) {
    let (a, b) = ellipse_constants(rho);
    let alpha = (a - b) / (4.0 * a * b) * (a * (z - y) + b * (z + y) - 2.0 * a * b);
    let beta = (a + b) / (4.0 * a * b) * (a * (y - z) + b * (z + y) - 2.0 * a * b);
    (alpha, beta)
}

/// The chain through `(y0, y1)` on `[-N, N]`.
pub fn chain(rho: f64, y0: Complex64, y1: Complex64, half_width: usize) -> Result<ChainWindow> {
    if !(rho > 0.0) {
        return Err(JsqError::param("rho", "must be positive"));
    }
    if !on_curve(rho, y0, y1, 1e-9) {
        return Err(JsqError::NotOnCurve {
            y: y0.re,
            z: y1.re,
        });
    }
    let n = half_width;
    let mut values = vec![Complex64::new(0.0, 0.0); 2 * n + 2];
    values[n] = y0;
    values[n + 1] = y1;
    let cc = 2.0 * (1.0 + rho + rho * rho) / rho;
    let d = (1.0 + rho) / rho;
    for i in (n + 2)..values.len() {
        values[i] = cc * values[i - 1] - values[i - 2] - d;
    }
    for i in (0..n).rev() {
        values[i] = cc * values[i + 1] - values[i + 2] - d;
    }
    values.truncate(2 * n + 1);
    if n == 0 {
        values = vec![y0];
    }
    let (alpha, beta) = chain_coefficients(rho, y0, y1);
    Ok(ChainWindow {
        rho,
        half_width: n,
        values,
        alpha,
        beta,
    })
}

/// `u_1, ..., u_n` from `u_0 = 0`, `u_1 = -(1+rho)/rho`.
pub fn u_sequence<T: Field>(rho: &T, n: usize) -> Vec<T> {
    let mut prev = T::zero();
    let mut cur = -((T::one() + rho.clone()) / rho.clone());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(cur.clone());
        let next = chain_step(rho, &prev, &cur);
        prev = cur;
        cur = next;
    }
    out
}

/// `v_0, v_{-1}, ..., v_{-(n-1)}` from `v_0 = (2+rho)/rho^2`, `v_1 = 1/rho`.
pub fn v_sequence<T: Field>(rho: &T, n: usize) -> Vec<T> {
    let two = T::from_i64(2);
    let mut prev = T::one() / rho.clone();
    let mut cur = (two + rho.clone()) / (rho.clone() * rho.clone());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(cur.clone());
        let next = chain_step(rho, &prev, &cur);
        prev = cur;
        cur = next;
    }
    out
}

/// Default accuracy of the truncated product.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Zeros `u_n`, poles `v_{-n}` and the normalizing constant of the truncated
/// product
/// `A(y) = C prod_{n=1}^{N} (1 - y/u_n) / prod_{n=0}^{N} (1 - y/v_{-n})`.
#[derive(Clone, Debug)]
pub struct ProductState {
    pub rho: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub c: f64,
}

impl ProductState {
    /// Truncation with `N` factors of each kind.
    pub fn with_terms(rho: f64, n: usize) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(JsqError::NotErgodic(format!("the product form requires 0 < rho < 1, got {rho}")));
        }
        let n = n.max(1);
        let u = u_sequence(&rho, n);
        let v = v_sequence(&rho, n + 1);
        let mut state = ProductState { rho, u, v, c: 1.0 };
        let at_one = state.raw(Complex64::new(1.0, 0.0)).re;
        state.c = (1.0 - rho) / at_one;
        Ok(state)
    }

    /// Smallest truncation whose tail bound at `|y| = v_0` is below `tol`.
    pub fn adaptive(rho: f64, tol: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(JsqError::NotErgodic(format!("the product form requires 0 < rho < 1, got {rho}")));
        }
        let v0 = (2.0 + rho) / (rho * rho);
        let r = 1.0 / growth_ratio(rho);
        let u = u_sequence(&rho, 400);
        let v = v_sequence(&rho, 401);
        for n in 1..400 {
            if v0 / u[n].abs() + v0 / v[n + 1] < tol * (1.0 - r) {
                return Self::with_terms(rho, n);
            }
        }
        Err(JsqError::TruncationInsufficient {
            estimate: v0 / u[399].abs(),
            tol,
        })
    }

    pub fn terms(&self) -> usize {
        self.u.len()
    }

    /// `v_0 = (2 + rho) / rho^2`, the pole closest to the origin.
    pub fn radius(&self) -> f64 {
        self.v[0]
    }

    fn raw(&self, y: Complex64) -> Complex64 {
        let num = self.u.iter().fold(Complex64::new(1.0, 0.0), |acc, &un| acc * (1.0 - y / un));
        let den = self.v.iter().fold(Complex64::new(1.0, 0.0), |acc, &vn| acc * (1.0 - y / vn));
        num / den
    }

    /// Bound on the neglected log-factors at `y`.
    pub fn tail_estimate(&self, y: Complex64) -> f64 {
        let r = 1.0 / growth_ratio(self.rho);
        let n = self.u.len();
        let next_u = chain_step(&self.rho, &self.u[n.saturating_sub(2).min(n - 1)], &self.u[n - 1]);
        let m = self.v.len();
        let next_v = chain_step(&self.rho, &self.v[m - 2], &self.v[m - 1]);
        let base = if n >= 2 { next_u } else { self.u[0] / r };
        (y.norm() / base.abs() + y.norm() / next_v.abs()) / (1.0 - r)
    }

    /// `A(y)` with its truncation error estimate.
    pub fn eval(&self, y: Complex64) -> Result<(Complex64, f64)> {
        if y.norm() >= self.radius() {
            return Err(JsqError::DomainViolation(format!(
                "|y| = {} must be below the first pole {}",
                y.norm(),
                self.radius()
            )));
        }
        let value = self.c * self.raw(y);
        Ok((value, self.tail_estimate(y) * value.norm()))
    }

    /// Taylor coefficients `pi(0, k)`, `k = 0..=kmax`, of the truncated product.
    pub fn coefficients(&self, kmax: usize) -> BoundarySeq<f64> {
        let mut coef = vec![0.0; kmax + 1];
        coef[0] = self.c;
        for &un in &self.u {
            for i in (1..=kmax).rev() {
                coef[i] -= coef[i - 1] / un;
            }
        }
        for &vn in &self.v {
            for i in 1..=kmax {
                coef[i] += coef[i - 1] / vn;
            }
        }
        BoundarySeq { values: coef }
    }
}

/// `A(y)` and an error estimate, with `n_trunc` factors or an adaptive
/// truncation when `None`. Fails if the estimate exceeds `tol`.
pub fn cohen_a(rho: f64, y: Complex64, n_trunc: Option<usize>, tol: f64) -> Result<(Complex64, f64)> {
    let state = match n_trunc {
        Some(n) => ProductState::with_terms(rho, n)?,
        None => ProductState::adaptive(rho, tol.min(DEFAULT_TOL))?,
    };
    let (value, err) = state.eval(y)?;
    if err > tol {
        return Err(JsqError::TruncationInsufficient { estimate: err, tol });
    }
    Ok((value, err))
}

/// `pi(0, k)`, `k <= kmax`, from the power series of the product.
pub fn boundary_coeffs_infinite(rho: f64, kmax: usize, n_trunc: Option<usize>) -> Result<BoundarySeq<f64>> {
    let state = match n_trunc {
        Some(n) => ProductState::with_terms(rho, n)?,
        None => ProductState::adaptive(rho, DEFAULT_TOL)?,
    };
    Ok(state.coefficients(kmax))
}
