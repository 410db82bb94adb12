//! Two queues with different service rates and a biased tie-break.

use jsq::asymmetric::{
    asym_boundaries_oracle, asym_functional_residual, asym_normalization_check, asym_reconstruct, small_x_radius,
};
use jsq::model::{asymmetric_generator, AsymmetricParams, Capacity};
use jsq::oracle::solve_balance_dense;
use num_complex::Complex64;

fn main() -> jsq::error::Result<()> {
    let cap = 4;
    let p = AsymmetricParams::new(1.2, 0.8, 1.5, 0.3, Capacity::Finite(cap))?;
    let b = asym_boundaries_oracle(&p)?;
    println!("pi(j, 0): {:?}", b.row);
    println!("pi(0, k): {:?}", b.col);

    let d = asym_reconstruct(&p, &b)?;
    let o = solve_balance_dense(&asymmetric_generator(&p, cap))?;
    println!("blocking {:.10}", d.get(cap, cap));
    println!("max gap to direct solve {:.1e}", d.max_abs_diff(&o));
    println!("normalization residual {:.1e}", asym_normalization_check(&p, &o));

    let x = Complex64::from_polar(0.5 * small_x_radius(&p), 1.0);
    let (r1, r2) = asym_functional_residual(&p, &o, x)?;
    println!("functional residuals {:.1e} {:.1e}", r1.norm(), r2.norm());
    Ok(())
}
