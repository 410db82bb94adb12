//! Event-driven simulation of the JSQ system coupled with three comparison
//! queues, all driven by the same four Poisson streams: arrivals `A1`, `A2`
//! of rate `rho` each and services `D1`, `D2` of rate one each.
//!
//! Along every path the totals satisfy
//! `N_{M/M/1/2K} <= N_{M/M/2/2K} <= L1 + L2 <= K + N_{M/M/1/K}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{JsqError, Result};
use crate::model::SymmetricParams;

/// Number of batches for batch-means intervals.
pub const BATCHES: usize = 20;
/// Normal quantile used for the interval half-width.
pub const CI_Z: f64 = 3.0;
/// Fraction of the run discarded before estimating stationary quantities.
pub const WARM_UP: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Stream {
    A1,
    A2,
    D1,
    D2,
}

const STREAMS: [Stream; 4] = [Stream::A1, Stream::A2, Stream::D1, Stream::D2];

/// Joint state of the four coupled systems.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CoupledState {
    pub l1: usize,
    pub l2: usize,
    /// M/M/1/K with arrival rate `2 rho` and service rate 2.
    pub mm1k: usize,
    /// M/M/2/2K with arrival rate `2 rho` and unit service rates.
    pub mm2: usize,
    /// M/M/1/2K with arrival rate `2 rho` and service rate 2.
    pub mm1_2k: usize,
}

/// Which systems reject an arrival.
#[derive(Clone, Copy, Debug, Default)]
struct Blocked {
    jsq: bool,
    mm1k: bool,
    mm2: bool,
    mm1_2k: bool,
}

impl CoupledState {
    pub fn total(&self) -> usize {
        self.l1 + self.l2
    }

    pub fn ordered(&self, cap: usize) -> bool {
        self.mm1_2k <= self.mm2 && self.mm2 <= self.total() && self.total() <= cap + self.mm1k
    }

    fn arrival(&mut self, cap: usize, to_one_on_tie: bool) -> Blocked {
        let b = Blocked {
            jsq: self.l1 == cap && self.l2 == cap,
            mm1k: self.mm1k == cap,
            mm2: self.mm2 == 2 * cap,
            mm1_2k: self.mm1_2k == 2 * cap,
        };
        if self.l1 < self.l2 {
            self.l1 += 1;
        } else if self.l2 < self.l1 {
            self.l2 += 1;
        } else if self.l1 < cap {
            // A1 breaks ties towards queue 1, A2 towards queue 2
            if to_one_on_tie {
                self.l1 += 1;
            } else {
                self.l2 += 1;
            }
        }
        self.mm1k += usize::from(!b.mm1k);
        self.mm2 += usize::from(!b.mm2);
        self.mm1_2k += usize::from(!b.mm1_2k);
        b
    }

    fn service_one(&mut self) {
        // D1 serves the longer queue, queue 1 on a tie
        if self.l1 >= self.l2.max(1) {
            self.l1 -= 1;
        } else if self.l1 < self.l2 {
            self.l2 -= 1;
        }
        self.mm1k = self.mm1k.saturating_sub(1);
        self.mm2 = self.mm2.saturating_sub(1);
        self.mm1_2k = self.mm1_2k.saturating_sub(1);
    }

    fn service_two(&mut self) {
        // D2 serves the shorter queue, queue 2 on a tie
        if 1 <= self.l1 && self.l1 < self.l2 {
            self.l1 -= 1;
        } else if 1 <= self.l2 && self.l2 <= self.l1 {
            self.l2 -= 1;
        }
        self.mm1k = self.mm1k.saturating_sub(1);
        if self.mm2 >= 2 {
            self.mm2 -= 1;
        }
        self.mm1_2k = self.mm1_2k.saturating_sub(1);
    }
}

/// Estimate with a batch-means half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    pub fn contains(&self, v: f64) -> bool {
        (self.mean - v).abs() <= self.half_width
    }

    fn from_batches(b: &[f64]) -> Self {
        let n = b.len() as f64;
        let mean = b.iter().sum::<f64>() / n;
        if b.len() < 2 {
            return Estimate { mean, half_width: f64::INFINITY };
        }
        let var = b.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Estimate {
            mean,
            half_width: CI_Z * (var / n).sqrt(),
        }
    }
}

/// Time-average occupancy and rejected-arrival fraction of one system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SystemStats {
    pub mean_occupancy: f64,
    pub blocking: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoupledReport {
    pub rho: f64,
    pub capacity: usize,
    pub seed: u64,
    pub events: u64,
    pub arrivals: u64,
    pub elapsed: f64,
    pub stream_counts: [u64; 4],
    pub violations: u64,
    pub jsq: SystemStats,
    pub mm1k: SystemStats,
    pub mm2_2k: SystemStats,
    pub mm1_2k: SystemStats,
    pub jsq_blocking: Estimate,
    pub final_state: CoupledState,
}

impl CoupledReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Copy, Debug)]
enum Stop {
    Events(u64),
    Arrivals(u64),
}

impl Stop {
    fn total(self) -> u64 {
        match self {
            Stop::Events(n) | Stop::Arrivals(n) => n,
        }
    }
}

struct Clocks {
    rngs: Vec<ChaCha8Rng>,
    rates: [f64; 4],
    next: [f64; 4],
}

impl Clocks {
    fn new(rho: f64, seed: u64) -> Self {
        let rates = [rho, rho, 1.0, 1.0];
        let mut rngs: Vec<ChaCha8Rng> = (0..4)
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i as u64);
                r
            })
            .collect();
        let mut next = [0.0; 4];
        for i in 0..4 {
            next[i] = exp_draw(&mut rngs[i], rates[i]);
        }
        Clocks { rngs, rates, next }
    }

    fn pop(&mut self) -> (usize, f64) {
        let (i, t) = self
            .next
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |a, (i, t)| if t < a.1 { (i, t) } else { a });
        self.next[i] = t + exp_draw(&mut self.rngs[i], self.rates[i]);
        (i, t)
    }
}

fn exp_draw(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.gen();
    -(1.0 - u).ln() / rate
}

fn validate(p: &SymmetricParams, n: u64) -> Result<usize> {
    if n == 0 {
        return Err(JsqError::param("events", "must be at least 1"));
    }
    if !(p.rho > 0.0 && p.rho.is_finite()) {
        return Err(JsqError::param("rho", "must be positive"));
    }
    p.cap()
}

fn run(p: &SymmetricParams, stop: Stop, seed: u64) -> Result<CoupledReport> {
    let cap = validate(p, stop.total())?;
    let mut clocks = Clocks::new(p.rho, seed);
    let mut s = CoupledState::default();
    let total = stop.total();
    let warm = (total as f64 * WARM_UP) as u64;
    let per_batch = ((total - warm) / BATCHES as u64).max(1);
    let (mut events, mut arrivals, mut violations) = (0u64, 0u64, 0u64);
    let mut counts = [0u64; 4];
    let mut now = 0.0;
    let mut t0 = None;
    let mut area = [0.0f64; 4];
    let mut blocked = [0u64; 4];
    let mut counted = 0u64;
    let mut batch = vec![(0u64, 0u64); BATCHES];
    loop {
        let progress = match stop {
            Stop::Events(_) => events,
            Stop::Arrivals(_) => arrivals,
        };
        if progress >= total {
            break;
        }
        let measuring = progress >= warm;
        let (i, t) = clocks.pop();
        if measuring {
            if t0.is_none() {
                t0 = Some(now);
            }
            let dt = t - now;
            area[0] += dt * s.total() as f64;
            area[1] += dt * s.mm1k as f64;
            area[2] += dt * s.mm2 as f64;
            area[3] += dt * s.mm1_2k as f64;
        }
        now = t;
        events += 1;
        counts[i] += 1;
        match STREAMS[i] {
            Stream::A1 | Stream::A2 => {
                let b = s.arrival(cap, STREAMS[i] == Stream::A1);
                if measuring {
                    counted += 1;
                    for (slot, hit) in blocked.iter_mut().zip([b.jsq, b.mm1k, b.mm2, b.mm1_2k]) {
                        *slot += u64::from(hit);
                    }
                    let k = (((progress - warm) / per_batch) as usize).min(BATCHES - 1);
                    batch[k].0 += u64::from(b.jsq);
                    batch[k].1 += 1;
                }
                arrivals += 1;
            }
            Stream::D1 => s.service_one(),
            Stream::D2 => s.service_two(),
        }
        if !s.ordered(cap) {
            violations += 1;
        }
    }
    let span = now - t0.unwrap_or(now);
    let stats = |k: usize| SystemStats {
        mean_occupancy: if span > 0.0 { area[k] / span } else { 0.0 },
        blocking: if counted > 0 { blocked[k] as f64 / counted as f64 } else { 0.0 },
    };
    let fractions: Vec<f64> = batch
        .iter()
        .filter(|(_, n)| *n > 0)
        .map(|&(b, n)| b as f64 / n as f64)
        .collect();
    let jsq_blocking = if fractions.is_empty() {
        Estimate { mean: 0.0, half_width: f64::INFINITY }
    } else {
        Estimate::from_batches(&fractions)
    };
    Ok(CoupledReport {
        rho: p.rho,
        capacity: cap,
        seed,
        events,
        arrivals,
        elapsed: now,
        stream_counts: counts,
        violations,
        jsq: stats(0),
        mm1k: stats(1),
        mm2_2k: stats(2),
        mm1_2k: stats(3),
        jsq_blocking,
        final_state: s,
    })
}

/// Runs the coupled systems for `n_events` stream events.
pub fn simulate_coupled(p: &SymmetricParams, n_events: u64, seed: u64) -> Result<CoupledReport> {
    run(p, Stop::Events(n_events), seed)
}

/// JSQ blocking probability from `n_arrivals` arrivals, with a batch-means
/// interval.
pub fn estimate_blocking(p: &SymmetricParams, n_arrivals: u64, seed: u64) -> Result<Estimate> {
    let cap = validate(p, n_arrivals)?;
    if cap == 0 {
        return Ok(Estimate { mean: 1.0, half_width: 0.0 });
    }
    Ok(run(p, Stop::Arrivals(n_arrivals), seed)?.jsq_blocking)
}

/// Seed of replica `i`.
pub fn replica_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add(i as u64)
}

/// Independent replicas with seeds `seed, seed + 1, ...`, run in parallel.
pub fn simulate_replicas(p: &SymmetricParams, n_events: u64, seed: u64, replicas: usize) -> Result<Vec<CoupledReport>> {
    if replicas == 0 {
        return Err(JsqError::param("replicas", "must be at least 1"));
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..replicas)
            .map(|i| scope.spawn(move || simulate_coupled(p, n_events, replica_seed(seed, i))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("replica thread panicked"))
            .collect()
    })
}

/// Pooled summary of several replicas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergedReport {
    pub replicas: usize,
    pub events: u64,
    pub violations: u64,
    pub jsq_blocking: Estimate,
    pub mean_occupancy: [f64; 4],
}

pub fn merge(reports: &[CoupledReport]) -> MergedReport {
    let n = reports.len().max(1) as f64;
    let blocking: Vec<f64> = reports.iter().map(|r| r.jsq_blocking.mean).collect();
    let jsq_blocking = if reports.len() > 1 {
        Estimate::from_batches(&blocking)
    } else {
        reports.first().map(|r| r.jsq_blocking).unwrap_or(Estimate { mean: 0.0, half_width: f64::INFINITY })
    };
    let mut occ = [0.0; 4];
    for r in reports {
        for (o, s) in occ.iter_mut().zip([r.jsq, r.mm1k, r.mm2_2k, r.mm1_2k]) {
            *o += s.mean_occupancy / n;
        }
    }
    MergedReport {
        replicas: reports.len(),
        events: reports.iter().map(|r| r.events).sum(),
        violations: reports.iter().map(|r| r.violations).sum(),
        jsq_blocking,
        mean_occupancy: occ,
    }
}
