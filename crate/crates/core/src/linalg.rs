//! Banded Gaussian elimination with partial pivoting.
//!
//! Rows are stored as windows `[start, start + len)` of absolute columns, so a
//! row exchange is a swap of two windows and fill-in simply widens a window.

use crate::error::{JsqError, Result};
use crate::scalar::Field;

#[derive(Clone, Debug)]
struct RowWindow<T> {
    start: usize,
    vals: Vec<T>,
}

impl<T: Field> RowWindow<T> {
    fn get(&self, c: usize) -> T {
        if c < self.start || c >= self.start + self.vals.len() {
            T::zero()
        } else {
            self.vals[c - self.start].clone()
        }
    }

    fn cover(&mut self, lo: usize, hi: usize) {
        if self.vals.is_empty() {
            self.start = lo;
            self.vals = vec![T::zero(); hi - lo];
            return;
        }
        if lo < self.start {
            let mut grown = vec![T::zero(); self.start - lo];
            grown.append(&mut self.vals);
            self.vals = grown;
            self.start = lo;
        }
        let end = self.start + self.vals.len();
        if hi > end {
            self.vals.resize(self.vals.len() + (hi - end), T::zero());
        }
    }

    fn add(&mut self, c: usize, v: T) {
        self.cover(c, c + 1);
        let i = c - self.start;
        self.vals[i] = self.vals[i].clone() + v;
    }

    /// `self -= m * other` over columns `>= from`.
    fn sub_scaled(&mut self, other: &RowWindow<T>, m: &T, from: usize) {
        let lo = other.start.max(from);
        let hi = other.start + other.vals.len();
        if lo >= hi {
            return;
        }
        self.cover(lo, hi);
        for c in lo..hi {
            let o = other.vals[c - other.start].clone();
            if o.is_zero() {
                continue;
            }
            let i = c - self.start;
            self.vals[i] = self.vals[i].clone() - m.clone() * o;
        }
    }
}

/// Sparse square matrix assembled row by row, solved by banded elimination.
#[derive(Clone, Debug)]
pub struct BandedSystem<T> {
    rows: Vec<RowWindow<T>>,
}

impl<T: Field> BandedSystem<T> {
    pub fn new(n: usize) -> Self {
        BandedSystem {
            rows: (0..n)
                .map(|r| RowWindow {
                    start: r,
                    vals: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&mut self, r: usize, c: usize, v: T) {
        self.rows[r].add(c, v);
    }

    pub fn clear_row(&mut self, r: usize) {
        self.rows[r] = RowWindow {
            start: r,
            vals: Vec::new(),
        };
    }

    /// Solves `A x = b` in place of `self`.
    pub fn solve(mut self, mut b: Vec<T>) -> Result<Vec<T>> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let kl = self
            .rows
            .iter()
            .enumerate()
            .map(|(r, row)| r.saturating_sub(row.start))
            .max()
            .unwrap_or(0);
        for i in 0..n {
            let last = (i + kl + 1).min(n);
            let mut best = None;
            let mut best_mag = -1.0f64;
            for r in i..last {
                let v = self.rows[r].get(i);
                if !v.is_zero() && v.approx().abs() > best_mag {
                    best_mag = v.approx().abs();
                    best = Some(r);
                }
            }
            let best = best.ok_or(JsqError::SingularSystem)?;
            self.rows.swap(i, best);
            b.swap(i, best);
            let pivot = self.rows[i].get(i);
            let (head, tail) = self.rows.split_at_mut(i + 1);
            let prow = &head[i];
            for (off, row) in tail[..last - i - 1].iter_mut().enumerate() {
                let v = row.get(i);
                if v.is_zero() {
                    continue;
                }
                let m = v / pivot.clone();
                row.sub_scaled(prow, &m, i);
                let r = i + 1 + off;
                b[r] = b[r].clone() - m * b[i].clone();
                drop_leading(row, i + 1);
            }
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let row = &self.rows[i];
            let mut acc = b[i].clone();
            let end = row.start + row.vals.len();
            for (c, xc) in x.iter().enumerate().take(end).skip(i + 1) {
                let a = row.vals[c - row.start].clone();
                if !a.is_zero() {
                    acc = acc - a * xc.clone();
                }
            }
            x[i] = acc / row.get(i);
        }
        Ok(x)
    }
}

fn drop_leading<T: Field>(row: &mut RowWindow<T>, from: usize) {
    if row.start < from {
        let cut = (from - row.start).min(row.vals.len());
        row.vals.drain(..cut);
        row.start = from;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn solves_with_row_exchange() {
        // [[0, 1], [2, 3]] x = [1, 8]  ->  x = [2.5, 1]
        let mut a = BandedSystem::<f64>::new(2);
        a.add(0, 1, 1.0);
        a.add(1, 0, 2.0);
        a.add(1, 1, 3.0);
        let x = a.solve(vec![1.0, 8.0]).unwrap();
        assert!((x[0] - 2.5).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tridiagonal_exact() {
        let n = 6;
        let mut a = BandedSystem::<BigRational>::new(n);
        for i in 0..n {
            a.add(i, i, BigRational::from_i64(2));
            if i > 0 {
                a.add(i, i - 1, BigRational::from_i64(-1));
            }
            if i + 1 < n {
                a.add(i, i + 1, BigRational::from_i64(-1));
            }
        }
        let b = vec![BigRational::from_i64(1); n];
        let x = a.clone().solve(b).unwrap();
        // x_i = (i+1)(n-i)/2
        for (i, xi) in x.iter().enumerate() {
            assert_eq!(*xi, BigRational::from_ratio(((i + 1) * (n - i)) as i64, 2));
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut a = BandedSystem::<f64>::new(2);
        a.add(0, 0, 1.0);
        a.add(1, 0, 1.0);
        assert!(matches!(a.solve(vec![1.0, 1.0]), Err(JsqError::SingularSystem)));
    }
}
