//! Mean number of customers with its bounds, and the blocking ratio table
//! against the M/M/1/K and M/M/2/2K queues written as CSV.

use jsq::model::SymmetricParams;
use jsq::totals_bounds::{linear_grid, mean_total, mean_total_bounds, ratio_table, uniform_gap_report, write_ratio_csv};

fn main() -> jsq::error::Result<()> {
    let cap = 5;
    println!("{:>5} {:>10} {:>10} {:>10}", "rho", "lower", "E(N)", "upper");
    for rho in [0.25, 0.5, 0.9, 1.0, 1.5, 3.0] {
        let p = SymmetricParams::finite(rho, cap)?;
        let (lo, hi) = mean_total_bounds(&p)?;
        println!("{rho:>5} {lo:>10.5} {:>10.5} {hi:>10.5}", mean_total(&p)?);
    }

    let grid = linear_grid(0.01, 6.0, 300);
    let r = uniform_gap_report(cap, &grid)?;
    for (name, g) in [("M/M/1/K", r.mm1k_gap), ("M/M/2/2K", r.mm2_2k_gap)] {
        println!("{name}: sup gap {:.3e} at rho {:.3}, bracket [{:.3e}, {:.3e}]", g.sup, g.argmax, g.lower, g.upper);
    }

    let rows = ratio_table(cap, &linear_grid(0.1, 1.9, 10))?;
    write_ratio_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
