//! JSQ, two M/M/1/K queues, M/M/2/2K and M/M/1/2K driven by the same clocks.
//! The ordering of the four systems holds on every path.

use jsq::blocking::blocking_probability;
use jsq::model::SymmetricParams;
use jsq::simulator::{estimate_blocking, merge, simulate_replicas};

fn main() -> jsq::error::Result<()> {
    let p = SymmetricParams::finite(1.0, 2)?;
    let reports = simulate_replicas(&p, 200_000, 11, 4)?;
    for r in &reports {
        println!(
            "seed {}: {} events, {} violations, occupancy jsq {:.4}, M/M/1/K at rate 2 {:.4}, M/M/2/2K {:.4}",
            r.seed, r.events, r.violations, r.jsq.mean_occupancy, r.mm1k.mean_occupancy, r.mm2_2k.mean_occupancy
        );
    }
    let m = merge(&reports);
    println!("pooled blocking {:.5} +- {:.5}", m.jsq_blocking.mean, m.jsq_blocking.half_width);

    let est = estimate_blocking(&p, 2_000_000, 5)?;
    let exact = blocking_probability(&p)?;
    println!("batch means {:.5} +- {:.5}, exact {exact:.5}, covered {}", est.mean, est.half_width, est.contains(exact));
    println!("{}", reports[0].to_json()?);
    Ok(())
}
