//! Unbounded queues: the distribution on a window, the diagonal sums, the
//! geometric decay along the diagonal and the limit of the finite models.

use jsq::infinite_dist::{convergence_finite_to_infinite, kingman_decay_ratio, stationary_infinite, t_seq};

fn main() -> jsq::error::Result<()> {
    let rho = 0.7;
    let d = stationary_infinite(rho, 80)?;
    for k in 0..5 {
        let row: Vec<String> = (0..5).map(|j| format!("{:.6}", d.get(j, k))).collect();
        println!("k = {k}: {}", row.join(" "));
    }

    let t = t_seq(rho, &d, 8)?;
    println!("T0 = {:.10} vs {:.10}", t.values[0], 1.0 / (1.0 + 2.0 * rho));
    println!("T recursion residual {:.1e}", t.max_residual());

    let table = kingman_decay_ratio(rho, &d, &[8, 10, 12, 14, 16], 1)?;
    println!("pi(k, k) / rho^2k: {:?}", table.diagonal);
    println!("relative spread {:.1e}", table.spread());

    for (k, gap) in convergence_finite_to_infinite(rho, &[5, 10, 20, 40, 80], 5)? {
        println!("K = {k:>2}: max gap {gap:.2e}");
    }
    Ok(())
}
