//! The boundary generating function of the unbounded model as an infinite
//! product over the chains u and v.

use jsq::cohen_chain::{chain, phi, u_sequence, v_sequence, ProductState, DEFAULT_TOL};
use jsq::finite_dist::px_roots;
use num_complex::Complex64;

fn main() -> jsq::error::Result<()> {
    let rho = 0.5;
    println!("u: {:?}", u_sequence(&rho, 5));
    println!("v: {:?}", v_sequence(&rho, 5));

    let v0 = Complex64::new((2.0 + rho) / (rho * rho), 0.0);
    let w = chain(rho, v0, Complex64::new(1.0 / rho, 0.0), 4)?;
    println!("closed form gap along the v chain {:.1e}", w.closed_form_gap());

    let s = ProductState::adaptive(rho, DEFAULT_TOL)?;
    println!("{} factors, C = {:.12}", s.terms(), s.c);
    for y in [0.0, 0.5, 1.0, 1.0 / rho] {
        let (a, err) = s.eval(Complex64::new(y, 0.0))?;
        println!("A({y}) = {:.12} (+- {err:.1e})", a.re);
    }
    println!("(2 - rho)(1 - rho) = {:.12}", (2.0 - rho) * (1.0 - rho));

    let x = Complex64::new(0.1, 0.05);
    let (y, z) = px_roots(rho, x)?;
    let (ay, _) = s.eval(y)?;
    let (az, _) = s.eval(z)?;
    println!("functional residual {:.1e}", (phi(rho, y, z) * ay - phi(rho, z, y) * az).norm());

    let b = s.coefficients(10);
    println!("pi(0, k): {:?}", b.values.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>());
    Ok(())
}
