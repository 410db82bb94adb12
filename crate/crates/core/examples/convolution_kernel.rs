//! Convolution powers of the reconstruction kernel by the three available
//! methods, in floating point and in exact arithmetic over Q(sqrt(1 + rho^2)).

use jsq::convkernel::{g_pow, ConvTable, PowMethod};
use jsq::scalar::QuadExt;
use num_rational::BigRational;

fn main() -> jsq::error::Result<()> {
    let rho = 1.5;
    let t = ConvTable::symmetric(&rho, 4, 8);
    for k in 1..=4 {
        let row: Vec<String> = t.row(k).iter().map(|v| format!("{v:>10.3}")).collect();
        println!("g^{k}: {}", row.join(""));
    }
    println!("column recursion residual {:.1e}", t.column_recursion_residual());

    for method in [PowMethod::Iterated, PowMethod::Binomial, PowMethod::SigmaShift] {
        let v = g_pow(&rho, 5, 12, method)?;
        println!("{method:?}: g^5(12) = {}", v[12]);
    }

    let exact = QuadExt::rational(BigRational::new(3.into(), 2.into()), BigRational::from_integer(0.into()));
    let a = g_pow(&exact, 5, 12, PowMethod::Binomial)?;
    let b = g_pow(&exact, 5, 12, PowMethod::Iterated)?;
    println!("exact binomial == iterated: {}, g^5(12) = {:?}", a == b, a[12].to_base().map(|r| r.to_string()));
    Ok(())
}
