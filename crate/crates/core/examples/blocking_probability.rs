//! Blocking probability of the JSQ system against the two comparison queues.
//!
//! cargo run --example blocking_probability -- 1.5 10

use jsq::blocking::{blocking_asymptotics, blocking_probability, blocking_probability_odd, Regime};
use jsq::model::SymmetricParams;
use jsq::totals_bounds::{mm1k_blocking, mm2_2k_blocking};

fn main() -> jsq::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let rho: f64 = args.next().map(|s| s.parse().expect("rho")).unwrap_or(1.0);
    let cap: usize = args.next().map(|s| s.parse().expect("capacity")).unwrap_or(5);

    println!("{:>3} {:>14} {:>14} {:>14} {:>14}", "K", "JSQ", "odd variant", "M/M/1/K", "M/M/2/2K");
    for k in 1..=cap {
        let p = SymmetricParams::finite(rho, k)?;
        println!(
            "{k:>3} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e}",
            blocking_probability(&p)?,
            blocking_probability_odd(&p)?,
            mm1k_blocking(&rho, k)?,
            mm2_2k_blocking(&rho, k)?,
        );
    }

    println!("\nexact / leading term");
    for (regime, points) in [
        (Regime::RhoToZero, [(1e-1, cap), (1e-2, cap), (1e-3, cap)]),
        (Regime::RhoToInfinity, [(1e1, cap), (1e2, cap), (1e3, cap)]),
        (Regime::CapacityToInfinity, [(rho, 10), (rho, 100), (rho, 1000)]),
    ] {
        let ratios: Vec<String> = points
            .iter()
            .map(|&(r, k)| {
                let p = SymmetricParams::finite(r, k)?;
                Ok(format!("{:.6}", blocking_probability(&p)? / blocking_asymptotics(&p, regime)?))
            })
            .collect::<jsq::error::Result<_>>()?;
        println!("{regime:?}: {}", ratios.join("  "));
    }
    Ok(())
}
