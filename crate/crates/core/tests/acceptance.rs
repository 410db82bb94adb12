use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use num_rational::BigRational;

use jsq::asymmetric::{
    asym_boundaries_oracle, asym_functional_residual, asym_normalization_check, asym_reconstruct, small_x_radius,
};
use jsq::blocking::{blocking_probability, blocking_probability_odd};
use jsq::cohen_chain::{phi, ProductState, DEFAULT_TOL};
use jsq::convkernel::{conv, g_pow, s_n_closed, s_n_sum, shift, ConvTable, PowMethod};
use jsq::finite_dist::{px_roots, stationary_finite};
use jsq::infinite_dist::{convergence_finite_to_infinite, kingman_decay_ratio, stationary_infinite, t_seq};
use jsq::model::{
    asymmetric_generator, symmetric_generator, variant_generator, AsymmetricParams, Capacity, JointDist,
    SymmetricParams,
};
use jsq::oracle::{solve_balance_dense, stationary_vector, truncated_infinite};
use jsq::scalar::{Field, QuadExt};
use jsq::simulator::{estimate_blocking, simulate_replicas};
use jsq::totals_bounds::{
    linear_grid, mean_total_bounds, order_chain, ratio_table, total_dist, uniform_gap_report, write_ratio_csv,
    GAP_SPAN,
};

const RHOS: [f64; 7] = [0.1, 0.5, 0.9, 1.0, 1.5, 2.0, 3.0];

type Outcome = Result<String, String>;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn sym(rho: f64, k: usize) -> Result<SymmetricParams, String> {
    SymmetricParams::finite(rho, k).map_err(e)
}

fn blocking_vs_oracle() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..=8 {
        for rho in RHOS {
            let closed = blocking_probability(&sym(rho, k)?).map_err(e)?;
            let o = solve_balance_dense(&symmetric_generator(&rho, k)).map_err(e)?;
            let gap = (closed - o.get(k, k)).abs();
            ensure(gap < 1e-10, || format!("K {k} rho {rho}: gap {gap:e}"))?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("max gap {worst:.1e} over 63 points"))
}

fn odd_variant() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=8 {
        for rho in RHOS {
            let closed = blocking_probability_odd(&sym(rho, k)?).map_err(e)?;
            let qm = variant_generator(&rho, k);
            let d = JointDist::from_state_vector(&qm, &stationary_vector(&qm).map_err(e)?);
            let full = d.get(k - 1, k) + d.get(k, k - 1);
            let gap = (closed - full).abs();
            ensure(gap < 1e-10, || format!("K {k} rho {rho}: gap {gap:e}"))?;
            worst = worst.max(gap);
        }
    }
    let exact = blocking_probability_odd(&SymmetricParams::finite(q(1, 1), 1).map_err(e)?).map_err(e)?;
    ensure(exact == q(2, 3), || format!("K 1 rho 1 gives {exact}"))?;
    Ok(format!("max gap {worst:.1e}; K 1 rho 1 = {exact}"))
}

fn reconstruction() -> Outcome {
    let mut worst = 0.0f64;
    let mut mass = 0.0f64;
    for k in 0..=8 {
        for rho in RHOS {
            let d = stationary_finite(&sym(rho, k)?).map_err(e)?;
            let o = solve_balance_dense(&symmetric_generator(&rho, k)).map_err(e)?;
            let gap = d.max_abs_diff(&o);
            let m = (d.total_mass() - 1.0).abs();
            ensure(gap < 1e-9 && m < 1e-9, || format!("K {k} rho {rho}: gap {gap:e} mass {m:e}"))?;
            worst = worst.max(gap);
            mass = mass.max(m);
        }
    }
    Ok(format!("max entry gap {worst:.1e}, mass defect {mass:.1e}"))
}

/// Residuals with magnitudes of the terms involved, for the kernel identities
/// on a table with `k <= 8`, `j <= 24`.
fn kernel_identities<T: Field>(rho: &T) -> Vec<(T, f64)> {
    let (kmax, jmax) = (9, 26);
    let t = ConvTable::symmetric(rho, kmax, jmax);
    let one = T::one();
    let two = T::from_i64(2);
    let c1 = two.clone() * (one + rho.clone());
    let c0 = two * rho.clone();
    let mut out = Vec::new();
    for n in 0..=22 {
        let a = t.get(1, n + 2);
        let b = c1.clone() * t.get(1, n + 1);
        let c = c0.clone() * t.get(1, n);
        let scale = a.approx().abs().max(b.approx().abs()).max(c.approx().abs());
        out.push((a - b + c, scale));
    }
    for l in 0..8 {
        for k in 0..=22 {
            let a = t.get(l + 1, k + 2);
            let b = c1.clone() * t.get(l + 1, k + 1);
            let c = c0.clone() * t.get(l + 1, k);
            let rhs = if l > 0 { -t.get(l, k + 1) } else { T::zero() };
            let scale = [a.approx(), b.approx(), c.approx(), rhs.approx()]
                .iter()
                .fold(0.0f64, |m, x| m.max(x.abs()));
            out.push((a - b + c - rhs, scale));
        }
    }
    for a in 1..=4 {
        for b in 1..=4 {
            let f = t.row(a);
            let h = t.row(b);
            let lhs = shift(&conv(f, h));
            let tf = shift(f);
            let r1 = conv(&tf, h);
            let th = shift(h);
            for n in 0..lhs.len().min(r1.len()).min(th.len()) {
                let rhs = r1[n].clone() + f[0].clone() * th[n].clone();
                let scale = lhs[n].approx().abs().max(rhs.approx().abs());
                out.push((lhs[n].clone() - rhs, scale));
            }
        }
    }
    for k in 1..=8 {
        for j in 0..k {
            out.push((t.get(k, j), 0.0));
        }
        let lead = if k % 2 == 0 { T::one() } else { -T::one() };
        out.push((t.get(k, k) - lead, 1.0));
    }
    out
}

fn convolution_identities() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for rho in RHOS {
        for (r, scale) in kernel_identities(&rho) {
            let rel = r.abs() / scale.max(1.0);
            ensure(rel < 1e-9, || format!("float identity residual {rel:e} at rho {rho}"))?;
            worst = worst.max(rel);
            count += 1;
        }
        for k in 1..=8 {
            let a = g_pow(&rho, k, 24, PowMethod::Iterated).map_err(e)?;
            let b = g_pow(&rho, k, 24, PowMethod::Binomial).map_err(e)?;
            let c = g_pow(&rho, k, 24, PowMethod::SigmaShift).map_err(e)?;
            for j in 0..=24 {
                let scale = a[j].abs().max(1.0);
                let rel = (a[j] - b[j]).abs().max((a[j] - c[j]).abs()) / scale;
                ensure(rel < 1e-9, || format!("g_pow disagreement {rel:e} at rho {rho} k {k} j {j}"))?;
                worst = worst.max(rel);
            }
        }
    }
    for (n, d) in [(1, 10), (1, 2), (1, 1), (3, 2), (2, 1), (3, 1)] {
        let r = q(n, d);
        for (res, _) in kernel_identities(&r) {
            ensure(res == q(0, 1), || format!("exact identity residual {res} at rho {n}/{d}"))?;
            count += 1;
        }
        let rq = QuadExt::rational(r, q(0, 1));
        for k in 1..=8 {
            let a = g_pow(&rq, k, 24, PowMethod::Iterated).map_err(e)?;
            let b = g_pow(&rq, k, 24, PowMethod::Binomial).map_err(e)?;
            let c = g_pow(&rq, k, 24, PowMethod::SigmaShift).map_err(e)?;
            ensure(a == b && a == c, || format!("exact g_pow disagreement at rho {n}/{d} k {k}"))?;
        }
    }
    Ok(format!("{count} identity checks, float max rel {worst:.1e}, rational exact"))
}

fn cohen_product() -> Outcome {
    let mut inv_gap = 0.0f64;
    let mut fe = 0.0f64;
    for rho in [0.3, 0.5, 0.7, 0.9] {
        let s = ProductState::adaptive(rho, DEFAULT_TOL).map_err(e)?;
        let (a1, _) = s.eval(Complex64::new(1.0, 0.0)).map_err(e)?;
        let g1 = (a1.re - (1.0 - rho)).abs().max(a1.im.abs());
        ensure(g1 < 1e-12, || format!("A(1) off by {g1:e} at rho {rho}"))?;
        let (ainv, _) = s.eval(Complex64::new(1.0 / rho, 0.0)).map_err(e)?;
        let g = (ainv.re - (2.0 - rho) * (1.0 - rho)).abs();
        ensure(g < 1e-8, || format!("A(1/rho) off by {g:e} at rho {rho}"))?;
        inv_gap = inv_gap.max(g);
        for i in 0..20 {
            let x = Complex64::from_polar(0.05 + 0.01 * i as f64, 0.7 + 0.31 * i as f64);
            let (y, z) = px_roots(rho, x).map_err(e)?;
            let (ay, _) = s.eval(y).map_err(e)?;
            let (az, _) = s.eval(z).map_err(e)?;
            let r = (phi(rho, y, z) * ay - phi(rho, z, y) * az).norm();
            ensure(r < 1e-8, || format!("functional residual {r:e} at rho {rho} x {x}"))?;
            fe = fe.max(r);
        }
    }
    let rho = 0.5;
    let b = ProductState::adaptive(rho, DEFAULT_TOL).map_err(e)?.coefficients(15);
    let (o, _) = truncated_infinite(rho, 80).map_err(e)?;
    let coef = (0..=15).map(|k| (b.get(k) - o.get(0, k)).abs()).fold(0.0, f64::max);
    ensure(coef < 1e-6, || format!("boundary coefficients off by {coef:e}"))?;
    Ok(format!("A(1/rho) gap {inv_gap:.1e}, functional {fe:.1e}, coefficients {coef:.1e}"))
}

fn infinite_reconstruction() -> Outcome {
    let rho = 0.5;
    let (o, _) = truncated_infinite(rho, 60).map_err(e)?;
    let d = stationary_infinite(rho, 12).map_err(e)?;
    let gap = d.max_abs_diff(&o.window(12));
    ensure(gap < 1e-7, || format!("window gap {gap:e}"))?;
    let wide = stationary_infinite(rho, 40).map_err(e)?;
    let t = t_seq(rho, &wide, 12).map_err(e)?;
    let t0 = (t.values[0] - 1.0 / (1.0 + 2.0 * rho)).abs();
    ensure(t.max_residual() < 1e-7 && t0 < 1e-7, || {
        format!("T residual {:e}, T0 gap {t0:e}", t.max_residual())
    })?;
    let ks: Vec<usize> = (8..=12).collect();
    let mut spread = 0.0f64;
    for r in [0.3, 0.5, 0.7] {
        let d = stationary_infinite(r, 40).map_err(e)?;
        for offset in [0, 1, 2] {
            let s = kingman_decay_ratio(r, &d, &ks, offset).map_err(e)?.spread();
            ensure(s < 0.05, || format!("decay ratios vary by {s} at rho {r} offset {offset}"))?;
            spread = spread.max(s);
        }
    }
    Ok(format!(
        "window gap {gap:.1e}, T residual {:.1e}, decay spread {spread:.1e}",
        t.max_residual()
    ))
}

fn convergence() -> Outcome {
    let caps = [5, 10, 20, 40];
    let mut last = Vec::new();
    for rho in [0.5, 0.9] {
        let gaps = convergence_finite_to_infinite(rho, &caps, 4).map_err(e)?;
        ensure(gaps.windows(2).all(|w| w[1].1 < w[0].1), || format!("not decreasing at rho {rho}: {gaps:?}"))?;
        last.push(gaps);
    }
    let g40 = last[0][3].1;
    ensure(g40 < 1e-6, || format!("gap at K 40 rho 0.5 is {g40:e}"))?;
    Ok(format!("gap(K 40, rho 0.5) {g40:.1e}, rho 0.9: {:.1e} -> {:.1e}", last[1][0].1, last[1][3].1))
}

/// The comparison curves plotted for `K = 5` and `K = 30`: `nu_K(K) / pi` on
/// `(1, 2)` and `nu'(2K) / pi` on `(0, 2)`.
fn plotted_ratios(k: usize, x: f64) -> (f64, f64) {
    if k == 5 {
        let nu = -((1.0 / 32.0) * x - x.powi(7) - 1.0 / 32.0 - 1.0 / x.powi(5) + 2.0 * x.powi(6))
            / ((x.powi(6) - 1.0) * (x - 2.0));
        let nu2 = (-(1.0 / 16.0) * x.powi(6) + 2.0 * x.powi(12) + (1.0 / 16.0) * x.powi(5) - 4.0 * x.powi(11) + 2.0)
            / ((2.0 * x.powi(11) - x - 1.0) * (x - 2.0));
        (nu, nu2)
    } else {
        let a = 1.0 / 1_073_741_824.0;
        let b = 1.0 / 536_870_912.0;
        let nu = (-a * x + x.powi(32) + a + 1.0 / x.powi(30) - 2.0 * x.powi(31)) / ((x.powi(31) - 1.0) * (x - 2.0));
        let nu2 = -(b * x.powi(31) - 2.0 * x.powi(62) - b * x.powi(30) + 4.0 * x.powi(61) - 2.0)
            / ((2.0 * x.powi(61) - x - 1.0) * (x - 2.0));
        (nu, nu2)
    }
}

fn bounds_and_comparisons() -> Outcome {
    let grid = linear_grid(GAP_SPAN.0, GAP_SPAN.1, 200);
    for k in [1, 2, 5, 10, 30] {
        for &rho in &grid {
            let c = order_chain(rho, k).map_err(e)?;
            let slack = 1e-14 * c[3];
            ensure(c.windows(2).all(|w| w[0] <= w[1] + slack), || {
                format!("order chain broken at K {k} rho {rho}: {c:?}")
            })?;
        }
        let r = uniform_gap_report(k, &grid).map_err(e)?;
        ensure(r.mm1k_gap.within() && r.mm2_2k_gap.within(), || format!("K {k}: {r:?}"))?;
    }
    for k in [1, 2, 5, 8, 10, 30] {
        for (n, d) in [(1, 10), (1, 2), (9, 10), (1, 1), (3, 2), (2, 1), (3, 1)] {
            let p = SymmetricParams::finite(q(n, d), k).map_err(e)?;
            let mean = total_dist(&p).map_err(e)?.mean();
            let (lo, hi) = mean_total_bounds(&p).map_err(e)?;
            ensure(lo <= mean && mean <= hi, || {
                format!("sandwich broken at K {k} rho {n}/{d}: {lo} {mean} {hi}")
            })?;
        }
    }
    let dir = std::env::temp_dir().join(format!("jsq-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(e)?;
    let mut plotted = 0.0f64;
    let mut near_two = Vec::new();
    for k in [5, 30] {
        let rows = ratio_table(k, &linear_grid(0.02, 1.98, 99)).map_err(e)?;
        let path = dir.join(format!("ratios_k{k}.csv"));
        write_ratio_csv(&rows, std::fs::File::create(&path).map_err(e)?).map_err(e)?;
        let text = std::fs::read_to_string(&path).map_err(e)?;
        ensure(text.lines().count() == rows.len() + 1, || "ratio csv row count".into())?;
        for r in &rows {
            if (r.rho - 1.0).abs() < 0.02 {
                continue;
            }
            let (nu, nu2) = plotted_ratios(k, r.rho);
            let mut g = (r.mm2_2k_ratio - nu2).abs();
            if r.rho > 1.0 {
                g = g.max((r.mm1k_ratio - nu).abs() / nu);
            }
            ensure(g < 1e-6, || format!("K {k} rho {}: ratio gap {g:e}", r.rho))?;
            plotted = plotted.max(g);
        }
        let tail: Vec<f64> = rows.iter().filter(|r| r.rho >= 1.2).map(|r| r.mm2_2k_ratio).collect();
        ensure(tail.windows(2).all(|w| w[0] <= w[1] + 1e-15) && tail.iter().all(|&x| x <= 1.0 + 1e-15), || {
            format!("K {k}: nu' ratio not rising to 1 below rho 2")
        })?;
        let end = 1.0 - tail[tail.len() - 1];
        ensure(end < 2e-3, || format!("K {k}: nu' ratio ends {end} below 1"))?;
        near_two.push(end);
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!(
        "order and brackets hold; plotted curves within {plotted:.1e}; 1 - nu' ratio at 1.98: {:.1e} (K 5), {:.1e} (K 30)",
        near_two[0], near_two[1]
    ))
}

fn asymmetric() -> Outcome {
    let sets = |k: usize| -> Result<Vec<AsymmetricParams>, String> {
        [
            (0.5, 1.0, 1.0, 0.5),
            (0.5, 1.0, 2.0, 0.5),
            (1.2, 0.8, 1.5, 0.3),
            (0.3, 2.0, 0.5, 0.9),
            (2.0, 1.0, 1.0, 0.2),
        ]
        .iter()
        .map(|&(l, m1, m2, p1)| AsymmetricParams::new(l, m1, m2, p1, Capacity::Finite(k)).map_err(e))
        .collect()
    };
    let (mut rec, mut fe, mut norm, mut sums) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 1..=6 {
        for p in sets(k)? {
            let o = solve_balance_dense(&asymmetric_generator(&p, k)).map_err(e)?;
            let d = asym_reconstruct(&p, &asym_boundaries_oracle(&p).map_err(e)?).map_err(e)?;
            let gap = d.max_abs_diff(&o);
            ensure(gap < 1e-9, || format!("reconstruction gap {gap:e} for {p:?}"))?;
            rec = rec.max(gap);
            let r = small_x_radius(&p);
            for i in 0..10 {
                let x = Complex64::from_polar(r * (0.1 + 0.09 * i as f64), 0.4 + 0.6 * i as f64);
                let (r1, r2) = asym_functional_residual(&p, &o, x).map_err(e)?;
                let m = r1.norm().max(r2.norm());
                ensure(m < 1e-9, || format!("functional residual {m:e} for {p:?}"))?;
                fe = fe.max(m);
            }
            let n = asym_normalization_check(&p, &o);
            ensure(n < 1e-10, || format!("normalization residual {n:e} for {p:?}"))?;
            norm = norm.max(n);
        }
    }
    for p in sets(8)? {
        for t in 0..4 {
            let x = Complex64::from_polar(0.05 + 0.05 * t as f64, 1.1 * t as f64);
            for n in 0..=8 {
                for i in 1..=2 {
                    let a = s_n_closed(x, n, i, &p).map_err(e)?;
                    let b = s_n_sum(x, n, i, &p).map_err(e)?;
                    let g = (a - b).norm();
                    ensure(g < 1e-12, || format!("closed form off by {g:e} at n {n} for {p:?}"))?;
                    sums = sums.max(g);
                }
            }
        }
    }
    Ok(format!(
        "reconstruction {rec:.1e}, functional {fe:.1e}, normalization {norm:.1e}, closed sums {sums:.1e}"
    ))
}

fn simulator() -> Outcome {
    let mut events = 0;
    for (rho, k) in [(0.5, 3), (1.0, 2), (2.0, 4)] {
        let reports = simulate_replicas(&sym(rho, k)?, 1_000_000, 2024, 5).map_err(e)?;
        for r in &reports {
            ensure(r.violations == 0, || format!("{} violations at rho {rho} K {k} seed {}", r.violations, r.seed))?;
            events += r.events;
        }
    }
    let p = sym(1.0, 2)?;
    let exact = blocking_probability(&p).map_err(e)?;
    ensure((exact - 4.0 / 17.0).abs() < 1e-15, || format!("closed form gives {exact}"))?;
    let est = estimate_blocking(&p, 10_000_000, 7).map_err(e)?;
    ensure(est.contains(exact), || format!("interval {} +- {} misses 4/17", est.mean, est.half_width))?;
    Ok(format!(
        "{events} events without violations; blocking {:.5} +- {:.5} vs 4/17",
        est.mean, est.half_width
    ))
}

struct Criterion {
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { name: "blocking closed form vs direct solve", limit: secs(5), run: blocking_vs_oracle },
        Criterion { name: "odd-capacity variant", limit: None, run: odd_variant },
        Criterion { name: "full reconstruction", limit: secs(10), run: reconstruction },
        Criterion { name: "convolution identities", limit: None, run: convolution_identities },
        Criterion { name: "product form of A", limit: secs(10), run: cohen_product },
        Criterion { name: "unbounded reconstruction", limit: None, run: infinite_reconstruction },
        Criterion { name: "finite to unbounded convergence", limit: None, run: convergence },
        Criterion { name: "bounds and comparisons", limit: None, run: bounds_and_comparisons },
        Criterion { name: "asymmetric model", limit: None, run: asymmetric },
        Criterion { name: "coupled simulator", limit: secs(60), run: simulator },
    ];
    let mut failed = 0;
    for (i, c) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut result = (c.run)();
        let took = start.elapsed();
        if let (Ok(_), Some(limit)) = (&result, c.limit) {
            if took > limit {
                result = Err(format!("took {took:.2?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {} ({took:.2?}): {detail}", i + 1, c.name),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {} ({took:.2?}): {detail}", i + 1, c.name);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
