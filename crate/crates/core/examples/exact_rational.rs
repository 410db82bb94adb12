//! The closed forms evaluated in exact rational arithmetic.

use jsq::blocking::{blocking_probability, blocking_probability_odd};
use jsq::finite_dist::stationary_finite;
use jsq::model::{symmetric_generator, SymmetricParams};
use jsq::oracle::solve_balance_dense;
use jsq::scalar::parse_rational;
use jsq::totals_bounds::{mean_total, mean_total_bounds};

fn main() -> jsq::error::Result<()> {
    let rho = parse_rational("1")?;
    for k in 1..=4 {
        let p = SymmetricParams::finite(rho.clone(), k)?;
        println!("K = {k}: blocking {}, odd variant {}", blocking_probability(&p)?, blocking_probability_odd(&p)?);
    }

    let rho = parse_rational("3/2")?;
    let p = SymmetricParams::finite(rho.clone(), 3)?;
    let d = stationary_finite(&p)?;
    let o = solve_balance_dense(&symmetric_generator(&rho, 3))?;
    let equal = d.entries().all(|(j, k, v)| v == o.get(j, k));
    println!("rho = 3/2, K = 3: reconstruction equals direct solve: {equal}");
    println!("pi(0, 0) = {}", d.get(0, 0));

    let (lo, hi) = mean_total_bounds(&p)?;
    println!("{lo} <= {} <= {hi}", mean_total(&p)?);
    Ok(())
}
