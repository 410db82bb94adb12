use approx::assert_relative_eq;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;

use jsq::asymmetric::{asym_boundaries_oracle, asym_reconstruct};
use jsq::blocking::blocking_probability;
use jsq::cli::fmt_num;
use jsq::cohen_chain::{ProductState, DEFAULT_TOL};
use jsq::convkernel::{g_pow, PowMethod};
use jsq::finite_dist::stationary_finite;
use jsq::model::{symmetric_generator, AsymmetricParams, JointDist, SymmetricParams};
use jsq::oracle::solve_balance_dense;
use jsq::simulator::simulate_coupled;
use jsq::totals_bounds::{mean_total_bounds, order_chain, total_dist};

fn sym(rho: f64, k: usize) -> SymmetricParams {
    SymmetricParams::finite(rho, k).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blocking_is_monotone(rho in 0.05f64..5.0, k in 1usize..30) {
        let b = blocking_probability(&sym(rho, k)).unwrap();
        prop_assert!(b > 0.0 && b < 1.0);
        prop_assert!(blocking_probability(&sym(rho, k + 1)).unwrap() <= b * (1.0 + 1e-14));
        prop_assert!(blocking_probability(&sym(rho * 1.1, k)).unwrap() >= b);
    }

    #[test]
    fn reconstruction_is_a_distribution(rho in 0.05f64..4.0, k in 1usize..10) {
        let d = stationary_finite(&sym(rho, k)).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-9);
        for (j, kk, p) in d.entries() {
            prop_assert!(p > -1e-12);
            prop_assert_eq!(p, d.get(kk, j));
        }
        let o = solve_balance_dense(&symmetric_generator(&rho, k)).unwrap();
        prop_assert!(d.max_abs_diff(&o) < 1e-9);
    }

    #[test]
    fn rational_and_float_agree(n in 1i64..40, den in 1i64..20, k in 1usize..8) {
        let r = BigRational::new(n.into(), den.into());
        let exact = blocking_probability(&SymmetricParams::finite(r, k).unwrap()).unwrap();
        let float = blocking_probability(&sym(n as f64 / den as f64, k)).unwrap();
        assert_relative_eq!(exact.to_f64().unwrap(), float, max_relative = 1e-12);
    }

    #[test]
    fn comparison_order(rho in 0.02f64..6.0, k in 1usize..40) {
        let c = order_chain(rho, k).unwrap();
        for w in c.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mean_sandwich(n in 1i64..30, den in 1i64..10, k in 1usize..12) {
        let p = SymmetricParams::finite(BigRational::new(n.into(), den.into()), k).unwrap();
        let mean = total_dist(&p).unwrap().mean();
        let (lo, hi) = mean_total_bounds(&p).unwrap();
        prop_assert!(lo <= mean && mean <= hi);
    }

    #[test]
    fn powers_agree(rho in 0.1f64..3.0, k in 1usize..7) {
        let a = g_pow(&rho, k, 16, PowMethod::Iterated).unwrap();
        let b = g_pow(&rho, k, 16, PowMethod::SigmaShift).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn product_at_inverse_load(rho in 0.05f64..0.95) {
        let s = ProductState::adaptive(rho, DEFAULT_TOL).unwrap();
        let (a1, _) = s.eval(Complex64::new(1.0, 0.0)).unwrap();
        let (ai, _) = s.eval(Complex64::new(1.0 / rho, 0.0)).unwrap();
        prop_assert!((a1.re - (1.0 - rho)).abs() < 1e-12);
        prop_assert!((ai.re - (2.0 - rho) * (1.0 - rho)).abs() < 1e-8);
    }

    #[test]
    fn symmetric_reduction(rho in 0.1f64..3.0, k in 1usize..6) {
        let s = sym(rho, k);
        let p = AsymmetricParams::from_symmetric(&s);
        let d = asym_reconstruct(&p, &asym_boundaries_oracle(&p).unwrap()).unwrap();
        prop_assert!(d.max_abs_diff(&stationary_finite(&s).unwrap()) < 1e-9);
    }

    #[test]
    fn coupling_never_breaks(rho in 0.1f64..4.0, k in 1usize..6, seed in any::<u64>()) {
        let r = simulate_coupled(&sym(rho, k), 20_000, seed).unwrap();
        prop_assert_eq!(r.violations, 0);
        prop_assert!(r.final_state.ordered(k));
    }

    #[test]
    fn fifteen_digits_round_trip(x in prop::num::f64::NORMAL) {
        let s = fmt_num(x);
        let back: f64 = s.parse().unwrap();
        prop_assert!((back - x).abs() <= 1e-14 * x.abs());
    }

    #[test]
    fn csv_round_trip(rho in 0.1f64..3.0, k in 0usize..6) {
        let d = stationary_finite(&sym(rho, k)).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = JointDist::<f64>::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.max_abs_diff(&d), 0.0);
    }
}
