//! The reconstruction kernel `g`, its convolution powers, and the identities
//! they satisfy.
//!
//! A kernel is the solution of a two-step recursion
//! `lead g(j+2) = mid g(j+1) - tail g(j)` with `g(0) = 0`, `g(1) = first`.
//! The symmetric model uses `g(j) = -(xi+^j - xi-^j) / (xi+ - xi-)` with
//! `xi± = 1 + rho ± sqrt(1 + rho^2)`; the asymmetric model has one kernel
//! per queue.

use num_complex::Complex64;
use num_rational::BigRational;

use crate::error::{JsqError, Result};
use crate::model::AsymmetricParams;
use crate::scalar::{Field, QuadExt};

/// Coefficients of a kernel recursion.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<T = f64> {
    pub lead: T,
    pub mid: T,
    pub tail: T,
    pub first: T,
}

impl<T: Field> Kernel<T> {
    /// `g(j+2) = 2(1+rho) g(j+1) - 2 rho g(j)`, `g(1) = -1`.
    pub fn symmetric(rho: &T) -> Self {
        let two = T::from_i64(2);
        Kernel {
            lead: T::one(),
            mid: two.clone() * (T::one() + rho.clone()),
            tail: two * rho.clone(),
            first: -T::one(),
        }
    }

    /// `g(0..=jmax)`.
    pub fn values(&self, jmax: usize) -> Vec<T> {
        let mut g = Vec::with_capacity(jmax + 1);
        g.push(T::zero());
        if jmax >= 1 {
            g.push(self.first.clone());
        }
        for j in 2..=jmax {
            let next = (self.mid.clone() * g[j - 1].clone() - self.tail.clone() * g[j - 2].clone()) / self.lead.clone();
            g.push(next);
        }
        g
    }
}

impl Kernel<f64> {
    /// Kernel `g_i` of queue `i` in the asymmetric model:
    /// `mu_{3-i} g(j+2) = (2 lambda + mu1 + mu2) g(j+1) - 2 lambda g(j)`,
    /// `g(1) = -mu_i / mu_{3-i}`.
    pub fn asymmetric(p: &AsymmetricParams, i: usize) -> Result<Self> {
        let (own, other) = match i {
            1 => (p.mu1, p.mu2),
            2 => (p.mu2, p.mu1),
            _ => return Err(JsqError::param("kernel", format!("kernel id must be 1 or 2, got {i}"))),
        };
        Ok(Kernel {
            lead: other,
            mid: 2.0 * p.lambda + p.mu1 + p.mu2,
            tail: 2.0 * p.lambda,
            first: -own / other,
        })
    }
}

/// `g(j)` for the symmetric kernel, by the recursion.
pub fn g<T: Field>(rho: &T, j: usize) -> T {
    Kernel::symmetric(rho).values(j).pop().unwrap_or_else(T::zero)
}

/// `(xi+, xi-) = 1 + rho ± sqrt(1 + rho^2)`.
pub fn kernel_roots(rho: f64) -> (f64, f64) {
    let s = (1.0 + rho * rho).sqrt();
    (1.0 + rho + s, 2.0 * rho / (1.0 + rho + s))
}

/// `g(j)` through the roots, for cross-checking the recursion.
pub fn g_closed(rho: f64, j: usize) -> f64 {
    let (p, m) = kernel_roots(rho);
    -(p.powi(j as i32) - m.powi(j as i32)) / (p - m)
}

/// `(f * h)(n) = sum_{m<=n} f(m) h(n-m)` over the common window.
pub fn conv<T: Field>(f: &[T], h: &[T]) -> Vec<T> {
    let n = f.len().min(h.len());
    (0..n)
        .map(|i| {
            (0..=i).fold(T::zero(), |acc, m| {
                if f[m].is_zero() || h[i - m].is_zero() {
                    acc
                } else {
                    acc + f[m].clone() * h[i - m].clone()
                }
            })
        })
        .collect()
}

/// Left shift `(tau f)(n) = f(n+1)`.
pub fn shift<T: Field>(f: &[T]) -> Vec<T> {
    f.iter().skip(1).cloned().collect()
}

/// How `g_pow` computes a convolution power.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowMethod {
    /// Repeated convolution with `g`.
    Iterated,
    /// Binomial expansion of `((h+ - h-) / (xi- - xi+))^{*k}`, an
    /// alternating double sum.
    Binomial,
    /// `(-1)^k` times the `k`-shifted convolution of `h+^{*k}` and `h-^{*k}`,
    /// `h±^{*k}(j) = C(j+k-1, k-1) xi±^j`.
    SigmaShift,
}

/// Number types in which the kernel roots are representable.
pub trait KernelRoots: Field {
    fn kernel_roots(rho: &Self) -> (Self, Self);
}

impl KernelRoots for f64 {
    fn kernel_roots(rho: &f64) -> (f64, f64) {
        kernel_roots(*rho)
    }
}

impl KernelRoots for QuadExt<BigRational> {
    /// `rho` must be rational (no `sqrt` part).
    fn kernel_roots(rho: &Self) -> (Self, Self) {
        let r = rho.a.clone();
        let one = BigRational::from_i64(1);
        let d = one.clone() + r.clone() * r.clone();
        let base = QuadExt::rational(one + r, d.clone());
        let root = QuadExt::root(d);
        (base.clone() + root.clone(), base - root)
    }
}

fn binomial<T: Field>(n: usize, r: usize) -> T {
    if r > n {
        return T::zero();
    }
    let r = r.min(n - r);
    let mut acc = T::one();
    for i in 1..=r {
        acc = acc * T::from_i64((n - r + i) as i64) / T::from_i64(i as i64);
    }
    acc
}

fn sign<T: Field>(k: usize) -> T {
    if k % 2 == 0 {
        T::one()
    } else {
        -T::one()
    }
}

/// `g^{*k}(0..=jmax)` for the symmetric kernel.
pub fn g_pow<T: KernelRoots>(rho: &T, k: usize, jmax: usize, method: PowMethod) -> Result<Vec<T>> {
    if k == 0 {
        return Err(JsqError::param("k", "convolution powers start at k = 1"));
    }
    match method {
        PowMethod::Iterated => {
            let g = Kernel::symmetric(rho).values(jmax);
            let mut acc = g.clone();
            for _ in 1..k {
                acc = conv(&acc, &g);
            }
            Ok(acc)
        }
        PowMethod::Binomial => {
            let (xp, xm) = T::kernel_roots(rho);
            let scale = (T::one() / (xm.clone() - xp.clone())).powi(k);
            Ok((0..=jmax)
                .map(|j| {
                    let edge = binomial::<T>(j + k - 1, k - 1);
                    let mut acc = edge.clone() * xp.powi(j) + sign::<T>(k) * edge * xm.powi(j);
                    for l in 1..k {
                        let mut inner = T::zero();
                        for i in 0..=j {
                            inner = inner
                                + binomial::<T>(i + k - l - 1, k - l - 1)
                                    * binomial::<T>(j - i + l - 1, l - 1)
                                    * xp.powi(i)
                                    * xm.powi(j - i);
                        }
                        acc = acc + sign::<T>(l) * binomial::<T>(k, l) * inner;
                    }
                    scale.clone() * acc
                })
                .collect())
        }
        PowMethod::SigmaShift => {
            let (xp, xm) = T::kernel_roots(rho);
            let h = |x: &T| -> Vec<T> {
                (0..=jmax).map(|j| binomial::<T>(j + k - 1, k - 1) * x.powi(j)).collect()
            };
            let prod = conv(&h(&xp), &h(&xm));
            Ok((0..=jmax)
                .map(|j| if j < k { T::zero() } else { sign::<T>(k) * prod[j - k].clone() })
                .collect())
        }
    }
}

/// Table of `g^{*k}(j)` for `1 <= k <= kmax`, `0 <= j <= jmax`, built by
/// iterated convolution.
#[derive(Clone, Debug)]
pub struct ConvTable<T = f64> {
    kernel: Kernel<T>,
    jmax: usize,
    values: Vec<Vec<T>>,
}

impl<T: Field> ConvTable<T> {
    pub fn build(kernel: Kernel<T>, kmax: usize, jmax: usize) -> Self {
        let g = kernel.values(jmax);
        let mut values = Vec::with_capacity(kmax);
        if kmax >= 1 {
            values.push(g.clone());
        }
        for k in 1..kmax {
            let next = conv(&values[k - 1], &g);
            values.push(next);
        }
        ConvTable { kernel, jmax, values }
    }

    pub fn symmetric(rho: &T, kmax: usize, jmax: usize) -> Self {
        Self::build(Kernel::symmetric(rho), kmax, jmax)
    }

    pub fn kmax(&self) -> usize {
        self.values.len()
    }

    pub fn jmax(&self) -> usize {
        self.jmax
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    /// `g^{*k}(j)`, with `g^{*0} = delta_0` and zero outside the window.
    pub fn get(&self, k: usize, j: usize) -> T {
        if k == 0 {
            return if j == 0 { T::one() } else { T::zero() };
        }
        if k > self.values.len() || j > self.jmax {
            return T::zero();
        }
        self.values[k - 1][j].clone()
    }

    pub fn row(&self, k: usize) -> &[T] {
        &self.values[k - 1]
    }

    /// Largest absolute residual of the column recursion
    /// `lead g^{*(l+1)}(k+2) - mid g^{*(l+1)}(k+1) + tail g^{*(l+1)}(k)
    ///  = [l > 0] lead first g^{*l}(k+1)`.
    pub fn column_recursion_residual(&self) -> f64 {
        let Kernel {
            lead,
            mid,
            tail,
            first,
        } = &self.kernel;
        let mut worst = 0.0f64;
        for l in 0..self.kmax() {
            for k in 0..self.jmax.saturating_sub(1) {
                let lhs = lead.clone() * self.get(l + 1, k + 2) - mid.clone() * self.get(l + 1, k + 1)
                    + tail.clone() * self.get(l + 1, k);
                let rhs = if l > 0 {
                    lead.clone() * first.clone() * self.get(l, k + 1)
                } else {
                    T::zero()
                };
                worst = worst.max((lhs - rhs).approx().abs());
            }
        }
        worst
    }
}

/// `S_n(x) = sum_{k<=n} x^k g_i^{*(n-k+1)}(k)` in closed form:
/// `-(mu_i / mu_{3-i}) x (y^n - z^n) / (y - z)` with `y, z` the roots of
/// `p_{x,i}`.
pub fn s_n_closed(x: Complex64, n: usize, i: usize, p: &AsymmetricParams) -> Result<Complex64> {
    let (y, z) = asym_roots(x, i, p)?;
    let (own, other) = if i == 1 { (p.mu1, p.mu2) } else { (p.mu2, p.mu1) };
    let mut diff = Complex64::new(0.0, 0.0);
    let mut yp = Complex64::new(1.0, 0.0);
    for m in 0..n {
        diff += yp * z.powu((n - 1 - m) as u32);
        yp *= y;
    }
    Ok(-(own / other) * x * diff)
}

/// `S_n(x)` by its defining sum.
pub fn s_n_sum(x: Complex64, n: usize, i: usize, p: &AsymmetricParams) -> Result<Complex64> {
    let table = ConvTable::build(Kernel::asymmetric(p, i)?, n + 1, n);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut xp = Complex64::new(1.0, 0.0);
    for k in 0..=n {
        acc += xp * table.get(n - k + 1, k);
        xp *= x;
    }
    Ok(acc)
}

/// Roots of `p_{x,i}(Y) = mu_{3-i} Y^2 - (2 lambda + mu1 + mu2) x Y + (mu_i + 2 lambda x) x`.
pub fn asym_roots(x: Complex64, i: usize, p: &AsymmetricParams) -> Result<(Complex64, Complex64)> {
    let (own, other) = match i {
        1 => (p.mu1, p.mu2),
        2 => (p.mu2, p.mu1),
        _ => return Err(JsqError::param("kernel", format!("kernel id must be 1 or 2, got {i}"))),
    };
    let s = 2.0 * p.lambda + p.mu1 + p.mu2;
    quadratic_roots(Complex64::new(other, 0.0), -s * x, (own + 2.0 * p.lambda * x) * x)
}

/// Distinct roots of `a Y^2 + b Y + c`, the larger-modulus root first.
pub fn quadratic_roots(a: Complex64, b: Complex64, c: Complex64) -> Result<(Complex64, Complex64)> {
    let disc = b * b - 4.0 * a * c;
    let scale = (b.norm_sqr() + (a * c).norm()).max(f64::MIN_POSITIVE);
    if disc.norm() <= 1e-14 * scale {
        return Err(JsqError::DegenerateDiscriminant);
    }
    let sq = disc.sqrt();
    // choose the sign that avoids cancellation, recover the other root from the product
    let q = if (b.conj() * sq).re >= 0.0 { -(b + sq) / 2.0 } else { -(b - sq) / 2.0 };
    let y = q / a;
    let z = if q.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { c / q };
    Ok((y, z))
}
