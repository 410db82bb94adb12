//! Stationary distribution of the symmetric model rebuilt from the boundary
//! column, checked against a direct solve of the balance equations.

use jsq::finite_dist::{boundary_from_blocking, stationary_finite};
use jsq::model::{symmetric_generator, SymmetricParams};
use jsq::oracle::{balance_residual, solve_balance_dense};

fn main() -> jsq::error::Result<()> {
    let (rho, cap) = (0.8, 4);
    let p = SymmetricParams::finite(rho, cap)?;

    let b = boundary_from_blocking(&p)?;
    println!("pi(0, k): {:?}", b.values.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>());

    let d = stationary_finite(&p)?;
    for k in (0..=cap).rev() {
        let row: Vec<String> = (0..=cap).map(|j| format!("{:.6}", d.get(j, k))).collect();
        println!("k = {k}: {}", row.join(" "));
    }

    let q = symmetric_generator(&rho, cap);
    let o = solve_balance_dense(&q)?;
    println!("mass {:.15}", d.total_mass());
    println!("max gap to direct solve {:.2e}", d.max_abs_diff(&o));
    println!("balance residual {:.2e}", balance_residual(&q, &d.to_state_vector(&q)));

    d.write_csv(std::io::stdout().lock())?;
    Ok(())
}
