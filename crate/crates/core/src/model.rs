//! Parameters, the state lattice and generator construction.
//!
//! States `(j, k)` mean `L1 = j`, `L2 = k`. Generators index the lattice
//! `{0..K}^2` row-major as `j + (K + 1) * k`; every solver and every
//! reconstruction uses this order.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{JsqError, Result};
use crate::scalar::{Field, Scalar};

/// Queue capacity: a finite `K` or unbounded queues.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Capacity {
    Finite(usize),
    Infinite,
}

impl Capacity {
    pub fn finite(self) -> Result<usize> {
        match self {
            Capacity::Finite(k) => Ok(k),
            Capacity::Infinite => Err(JsqError::InfiniteCapacity),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Capacity::Infinite)
    }
}

impl fmt::Display for Capacity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Capacity::Finite(k) => write!(f, "{k}"),
            Capacity::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Capacity {
    type Err = JsqError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinite" | "Infinite" | "∞" => Ok(Capacity::Infinite),
            other => other
                .parse::<usize>()
                .map(Capacity::Finite)
                .map_err(|_| JsqError::param("cap", format!("expected a natural number or `inf`, got {other:?}"))),
        }
    }
}

/// Symmetric model: arrival rate `2 rho`, unit service at both queues.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricParams<T = f64> {
    pub rho: T,
    pub capacity: Capacity,
}

impl<T: Scalar> SymmetricParams<T> {
    pub fn new(rho: T, capacity: Capacity) -> Result<Self> {
        if !(rho > T::zero()) {
            return Err(JsqError::param("rho", format!("must be positive, got {}", rho.approx())));
        }
        Ok(SymmetricParams { rho, capacity })
    }

    pub fn finite(rho: T, k: usize) -> Result<Self> {
        Self::new(rho, Capacity::Finite(k))
    }

    pub fn infinite(rho: T) -> Result<Self> {
        let p = Self::new(rho, Capacity::Infinite)?;
        p.require_ergodic()?;
        Ok(p)
    }

    /// The finite capacity `K`, or an error for infinite queues.
    pub fn cap(&self) -> Result<usize> {
        self.capacity.finite()
    }

    pub fn require_ergodic(&self) -> Result<()> {
        if self.rho >= T::one() {
            return Err(JsqError::NotErgodic(format!(
                "infinite capacity requires rho < 1, got {}",
                self.rho.approx()
            )));
        }
        Ok(())
    }

    pub fn with_capacity(&self, capacity: Capacity) -> Self {
        SymmetricParams {
            rho: self.rho.clone(),
            capacity,
        }
    }
}

/// Asymmetric model: arrival rate `2 lambda`, service rates `mu1`, `mu2`,
/// ties routed to queue 1 with probability `p1`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymmetricParams {
    pub lambda: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub p1: f64,
    pub capacity: Capacity,
}

impl AsymmetricParams {
    pub fn new(lambda: f64, mu1: f64, mu2: f64, p1: f64, capacity: Capacity) -> Result<Self> {
        for (name, v) in [("lambda", lambda), ("mu1", mu1), ("mu2", mu2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(JsqError::param(name, format!("rate must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&p1) {
            return Err(JsqError::param("p1", format!("must lie in [0, 1], got {p1}")));
        }
        if capacity.is_infinite() && 2.0 * lambda >= mu1 + mu2 {
            return Err(JsqError::NotErgodic(format!(
                "infinite capacity requires 2 lambda < mu1 + mu2, got {} >= {}",
                2.0 * lambda,
                mu1 + mu2
            )));
        }
        Ok(AsymmetricParams {
            lambda,
            mu1,
            mu2,
            p1,
            capacity,
        })
    }

    /// The asymmetric parametrisation of the symmetric model.
    pub fn from_symmetric(p: &SymmetricParams) -> Self {
        AsymmetricParams {
            lambda: p.rho,
            mu1: 1.0,
            mu2: 1.0,
            p1: 0.5,
            capacity: p.capacity,
        }
    }

    pub fn p2(&self) -> f64 {
        1.0 - self.p1
    }

    pub fn cap(&self) -> Result<usize> {
        self.capacity.finite()
    }
}

/// CTMC generator on a subset of `{0..K}^2`.
///
/// Off-diagonal rates are stored per row; the diagonal is the negative row
/// sum and is never stored.
#[derive(Clone, Debug)]
pub struct RateMatrix<T = f64> {
    side: usize,
    states: Vec<(usize, usize)>,
    index: Vec<Option<usize>>,
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Field> RateMatrix<T> {
    fn on_lattice(k: usize, keep: impl Fn(usize, usize) -> bool) -> Self {
        let side = k + 1;
        let mut states = Vec::with_capacity(side * side);
        let mut index = vec![None; side * side];
        for l2 in 0..side {
            for l1 in 0..side {
                if keep(l1, l2) {
                    index[l1 + side * l2] = Some(states.len());
                    states.push((l1, l2));
                }
            }
        }
        let rows = vec![Vec::new(); states.len()];
        RateMatrix {
            side,
            states,
            index,
            rows,
        }
    }

    fn push(&mut self, from: (usize, usize), to: (usize, usize), rate: T) {
        if rate.is_zero() {
            return;
        }
        if let (Some(a), Some(b)) = (self.index_of(from.0, from.1), self.index_of(to.0, to.1)) {
            self.rows[a].push((b, rate));
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    /// Largest coordinate value `K`.
    pub fn capacity(&self) -> usize {
        self.side - 1
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    pub fn index_of(&self, j: usize, k: usize) -> Option<usize> {
        if j >= self.side || k >= self.side {
            return None;
        }
        self.index[j + self.side * k]
    }

    /// Off-diagonal transitions out of state `v` as `(target, rate)`.
    pub fn row(&self, v: usize) -> &[(usize, T)] {
        &self.rows[v]
    }

    pub fn exit_rate(&self, v: usize) -> T {
        self.rows[v].iter().fold(T::zero(), |acc, (_, r)| acc + r.clone())
    }

    /// `Q(v, w)`, diagonal included.
    pub fn get(&self, v: usize, w: usize) -> T {
        if v == w {
            return -self.exit_rate(v);
        }
        self.rows[v]
            .iter()
            .filter(|(t, _)| *t == w)
            .fold(T::zero(), |acc, (_, r)| acc + r.clone())
    }

    /// Rate between lattice points, zero if either is absent.
    pub fn rate(&self, from: (usize, usize), to: (usize, usize)) -> T {
        match (self.index_of(from.0, from.1), self.index_of(to.0, to.1)) {
            (Some(a), Some(b)) => self.get(a, b),
            _ => T::zero(),
        }
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.dim()).map(|v| self.exit_rate(v).approx()).fold(0.0, f64::max)
    }

    /// `(pi Q)(w)` for every state `w`.
    pub fn apply_left(&self, pi: &[T]) -> Vec<T> {
        let mut out: Vec<T> = (0..self.dim()).map(|v| -(self.exit_rate(v) * pi[v].clone())).collect();
        for (v, row) in self.rows.iter().enumerate() {
            for (w, r) in row {
                out[*w] = out[*w].clone() + pi[v].clone() * r.clone();
            }
        }
        out
    }
}

/// Generator of the symmetric model on `{0..K}^2`.
pub fn symmetric_generator<T: Field>(rho: &T, k: usize) -> RateMatrix<T> {
    symmetric_on(rho, k, |_, _| true)
}

/// Generator of the variant that admits at most `2K - 1` customers: the
/// lattice without `(K, K)`.
pub fn variant_generator<T: Field>(rho: &T, k: usize) -> RateMatrix<T> {
    symmetric_on(rho, k, |a, b| !(a == k && b == k))
}

fn symmetric_on<T: Field>(rho: &T, cap: usize, keep: impl Fn(usize, usize) -> bool) -> RateMatrix<T> {
    let mut q = RateMatrix::on_lattice(cap, keep);
    let one = T::one();
    let two_rho = rho.clone() + rho.clone();
    for &(j, k) in q.states.clone().iter() {
        if j == k {
            if k < cap {
                q.push((j, k), (j + 1, k), rho.clone());
                q.push((j, k), (j, k + 1), rho.clone());
            }
            if k > 0 {
                q.push((j, k), (j - 1, k), one.clone());
                q.push((j, k), (j, k - 1), one.clone());
            }
        } else if j < k {
            q.push((j, k), (j + 1, k), two_rho.clone());
            if j > 0 {
                q.push((j, k), (j - 1, k), one.clone());
            }
            q.push((j, k), (j, k - 1), one.clone());
        } else {
            q.push((j, k), (j, k + 1), two_rho.clone());
            if k > 0 {
                q.push((j, k), (j, k - 1), one.clone());
            }
            q.push((j, k), (j - 1, k), one.clone());
        }
    }
    q
}

/// Generator of the asymmetric model on `{0..K}^2`.
pub fn asymmetric_generator(p: &AsymmetricParams, cap: usize) -> RateMatrix<f64> {
    let mut q = RateMatrix::on_lattice(cap, |_, _| true);
    let arrival = 2.0 * p.lambda;
    for &(j, k) in q.states.clone().iter() {
        if j == k {
            if k < cap {
                q.push((j, k), (j + 1, k), arrival * p.p1);
                q.push((j, k), (j, k + 1), arrival * p.p2());
            }
        } else if j < k {
            q.push((j, k), (j + 1, k), arrival);
        } else {
            q.push((j, k), (j, k + 1), arrival);
        }
        if j > 0 {
            q.push((j, k), (j - 1, k), p.mu1);
        }
        if k > 0 {
            q.push((j, k), (j, k - 1), p.mu2);
        }
    }
    q
}

/// Parameter sets that define a generator once the capacity is finite.
pub trait BuildGenerator {
    type Scalar: Field;
    fn generator(&self) -> Result<RateMatrix<Self::Scalar>>;
}

impl<T: Scalar> BuildGenerator for SymmetricParams<T> {
    type Scalar = T;
    fn generator(&self) -> Result<RateMatrix<T>> {
        Ok(symmetric_generator(&self.rho, self.cap()?))
    }
}

impl BuildGenerator for AsymmetricParams {
    type Scalar = f64;
    fn generator(&self) -> Result<RateMatrix<f64>> {
        AsymmetricParams::new(self.lambda, self.mu1, self.mu2, self.p1, Capacity::Finite(0))?;
        Ok(asymmetric_generator(self, self.cap()?))
    }
}

/// Builds the generator on `{0..K}^2`; infinite capacities must be truncated
/// by the caller first.
pub fn build_generator<P: BuildGenerator>(params: &P) -> Result<RateMatrix<P::Scalar>> {
    params.generator()
}

/// A probability assignment on `{0..K}^2` (or a window of the quarter plane).
///
/// Symmetric distributions store the triangle `j <= k` only; reads of
/// `(j, k)` with `j > k` return `pi(k, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDist<T = f64> {
    capacity: usize,
    symmetric: bool,
    data: Vec<T>,
}

impl<T: Field> JointDist<T> {
    pub fn zeros(capacity: usize, symmetric: bool) -> Self {
        let side = capacity + 1;
        let len = if symmetric { side * (side + 1) / 2 } else { side * side };
        JointDist {
            capacity,
            symmetric,
            data: vec![T::zero(); len],
        }
    }

    fn slot(&self, j: usize, k: usize) -> usize {
        if self.symmetric {
            let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
            hi * (hi + 1) / 2 + lo
        } else {
            j + (self.capacity + 1) * k
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn get(&self, j: usize, k: usize) -> T {
        if j > self.capacity || k > self.capacity {
            return T::zero();
        }
        self.data[self.slot(j, k)].clone()
    }

    /// Writes `pi(j, k)`; for symmetric storage this also sets `pi(k, j)`.
    pub fn set(&mut self, j: usize, k: usize, value: T) {
        let s = self.slot(j, k);
        self.data[s] = value;
    }

    /// All `(j, k, mass)` over the full square, `k` outer, `j` inner.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let side = self.capacity + 1;
        (0..side).flat_map(move |k| (0..side).map(move |j| (j, k, self.get(j, k))))
    }

    pub fn total_mass(&self) -> T {
        self.entries().fold(T::zero(), |acc, (_, _, p)| acc + p)
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> JointDist<U> {
        JointDist {
            capacity: self.capacity,
            symmetric: self.symmetric,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> JointDist<f64> {
        self.map(|p| p.approx())
    }

    /// Largest absolute entrywise difference over the common window.
    pub fn max_abs_diff(&self, other: &JointDist<T>) -> f64 {
        let side = self.capacity.min(other.capacity) + 1;
        let mut worst = 0.0f64;
        for k in 0..side {
            for j in 0..side {
                worst = worst.max((self.get(j, k) - other.get(j, k)).approx().abs());
            }
        }
        worst
    }

    /// Restriction to `{0..window}^2`.
    pub fn window(&self, window: usize) -> JointDist<T> {
        let w = window.min(self.capacity);
        let mut out = JointDist::zeros(w, self.symmetric);
        for k in 0..=w {
            for j in 0..=w {
                if !self.symmetric || j <= k {
                    out.set(j, k, self.get(j, k));
                }
            }
        }
        out
    }

    /// Masses in the state order of `q`.
    pub fn to_state_vector(&self, q: &RateMatrix<T>) -> Vec<T> {
        q.states().iter().map(|&(j, k)| self.get(j, k)).collect()
    }

    /// Builds a distribution from a probability vector indexed like `q`.
    pub fn from_state_vector(q: &RateMatrix<T>, pi: &[T]) -> Self {
        let mut d = JointDist::zeros(q.capacity(), false);
        for (v, &(j, k)) in q.states().iter().enumerate() {
            d.set(j, k, pi[v].clone());
        }
        d
    }
}

/// True iff all masses are `>= -tol`, the total is `1` within `tol`, and
/// the symmetric flag is honoured.
pub fn validate_dist<T: Scalar>(d: &JointDist<T>, tol: f64) -> bool {
    let mut total = 0.0;
    let side = d.capacity() + 1;
    for k in 0..side {
        for j in 0..side {
            let p = d.get(j, k).approx();
            if !(p >= -tol) {
                return false;
            }
            if d.is_symmetric() && d.get(j, k) != d.get(k, j) {
                return false;
            }
            total += p;
        }
    }
    (total - 1.0).abs() <= tol
}

#[derive(Serialize, Deserialize)]
struct DistJson {
    #[serde(rename = "K")]
    capacity: usize,
    entries: Vec<(usize, usize, f64)>,
}

#[derive(Serialize, Deserialize)]
struct DistRow {
    j: usize,
    k: usize,
    prob: f64,
}

impl JointDist<f64> {
    /// CSV with header `j,k,prob`, one row per lattice point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (j, k, prob) in self.entries() {
            w.serialize(DistRow { j, k, prob })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize::<DistRow>() {
            let row = row?;
            rows.push((row.j, row.k, row.prob));
        }
        Self::from_triples(rows)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = DistJson {
            capacity: self.capacity,
            entries: self.entries().collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: DistJson = serde_json::from_str(s)?;
        let mut d = Self::from_triples(doc.entries)?;
        if d.capacity < doc.capacity {
            let mut wide = JointDist::zeros(doc.capacity, false);
            for (j, k, p) in d.entries() {
                wide.set(j, k, p);
            }
            d = wide;
        }
        Ok(d)
    }

    fn from_triples(rows: Vec<(usize, usize, f64)>) -> Result<Self> {
        let cap = rows.iter().map(|&(j, k, _)| j.max(k)).max().unwrap_or(0);
        let mut d = JointDist::zeros(cap, false);
        for (j, k, p) in rows {
            if !p.is_finite() {
                return Err(JsqError::Parse(format!("non-finite mass at ({j}, {k})")));
            }
            d.set(j, k, p);
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_k1_rho1_transcription() {
        let q = symmetric_generator(&1.0, 1);
        assert_eq!(q.dim(), 4);
        assert_eq!(q.rate((0, 0), (0, 1)), 1.0);
        assert_eq!(q.rate((0, 0), (1, 0)), 1.0);
        assert_eq!(q.rate((1, 1), (1, 0)), 1.0);
        assert_eq!(q.rate((1, 1), (0, 1)), 1.0);
        assert_eq!(q.rate((0, 1), (1, 1)), 2.0);
        assert_eq!(q.get(0, 0), -2.0);
    }

    #[test]
    fn top_left_corner_only_moves_east_and_south() {
        for rho in [0.3, 1.0, 2.5] {
            let k = 4;
            let q = symmetric_generator(&rho, k);
            let v = q.index_of(0, k).unwrap();
            let mut out: Vec<_> = q.row(v).iter().map(|&(w, r)| (q.states()[w], r)).collect();
            out.sort_by_key(|&(s, _)| s);
            assert_eq!(out, vec![((0, k - 1), 1.0), ((1, k), 2.0 * rho)]);
        }
    }

    #[test]
    fn asymmetric_ties_split_arrivals() {
        let p = AsymmetricParams::new(0.5, 1.0, 2.0, 0.3, Capacity::Finite(3)).unwrap();
        let q = build_generator(&p).unwrap();
        for k in 0..3 {
            assert!((q.rate((k, k), (k + 1, k)) - 0.3).abs() < 1e-15);
            assert!((q.rate((k, k), (k, k + 1)) - 0.7).abs() < 1e-15);
        }
        assert_eq!(q.rate((3, 3), (3, 4)), 0.0);
        assert_eq!(q.rate((2, 1), (1, 1)), 1.0);
        assert_eq!(q.rate((2, 1), (2, 0)), 2.0);
    }

    #[test]
    fn infinite_capacity_is_rejected() {
        let p = SymmetricParams::new(0.5, Capacity::Infinite).unwrap();
        assert!(matches!(build_generator(&p), Err(JsqError::InfiniteCapacity)));
        assert!(SymmetricParams::new(-1.0, Capacity::Finite(2)).is_err());
        assert!(AsymmetricParams::new(0.5, 0.0, 1.0, 0.5, Capacity::Finite(2)).is_err());
        assert!(AsymmetricParams::new(1.0, 1.0, 1.0, 0.5, Capacity::Infinite).is_err());
    }

    #[test]
    fn variant_drops_the_full_state() {
        let q = variant_generator(&1.0, 2);
        assert_eq!(q.dim(), 8);
        assert!(q.index_of(2, 2).is_none());
        assert_eq!(q.rate((1, 2), (2, 2)), 0.0);
        assert_eq!(q.exit_rate(q.index_of(1, 2).unwrap()), 2.0);
    }

    #[test]
    fn validate_dist_examples() {
        let mut point = JointDist::<f64>::zeros(0, true);
        point.set(0, 0, 1.0);
        assert!(validate_dist(&point, 1e-12));

        let mut uniform = JointDist::<f64>::zeros(1, false);
        for (j, k) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            uniform.set(j, k, 0.25);
        }
        assert!(validate_dist(&uniform, 1e-12));

        let mut short = uniform.clone();
        short.set(1, 1, 0.15);
        assert!(!validate_dist(&short, 1e-9));

        let mut negative = uniform;
        negative.set(0, 0, -0.25);
        negative.set(1, 1, 0.75);
        assert!(!validate_dist(&negative, 1e-9));
    }

    #[test]
    fn symmetric_storage_mirrors() {
        let mut d = JointDist::<f64>::zeros(3, true);
        d.set(1, 3, 0.5);
        assert_eq!(d.get(3, 1), 0.5);
        d.set(3, 1, 0.25);
        assert_eq!(d.get(1, 3), 0.25);
        assert_eq!(d.get(4, 0), 0.0);
    }

    #[test]
    fn csv_and_json_schemas() {
        let mut d = JointDist::<f64>::zeros(1, true);
        d.set(0, 0, 0.2);
        d.set(0, 1, 0.2);
        d.set(1, 1, 0.4);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("j,k,prob\n0,0,0.2\n1,0,0.2\n"));
        let back = JointDist::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.max_abs_diff(&d), 0.0);

        let json = d.to_json().unwrap();
        assert!(json.starts_with("{\"K\":1,\"entries\":[[0,0,0.2],"));
        let back = JointDist::from_json(&json).unwrap();
        assert_eq!(back.max_abs_diff(&d), 0.0);
    }

    #[test]
    fn capacity_parses() {
        assert_eq!("inf".parse::<Capacity>().unwrap(), Capacity::Infinite);
        assert_eq!("7".parse::<Capacity>().unwrap(), Capacity::Finite(7));
        assert!("-2".parse::<Capacity>().is_err());
    }
}
