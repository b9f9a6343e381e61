//! Property tests for the cheap algebraic layers: quadrature, selector
//! transmission, purity bounds, and the constrained least-squares solver.

use proptest::prelude::*;
use qbounce_core::dynamics::{purity, DensityMatrix};
use qbounce_core::experiment::transmission;
use qbounce_core::fitting::constrained_coefficient_fit;
use qbounce_core::nnls::nnls;
use qbounce_core::quadrature::QuadratureScheme;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_reproduces_interval_length(
        xi_max in 1.0f64..120.0,
        panels in 1usize..40,
    ) {
        let scheme = QuadratureScheme::new(xi_max, panels).unwrap();
        let one = scheme.integrate(|_| 1.0);
        prop_assert!((one / xi_max - 1.0).abs() < 1e-12);
        for (x, w) in scheme.points() {
            prop_assert!(w > 0.0 && x > 0.0 && x < xi_max);
        }
    }

    #[test]
    fn quadrature_is_exact_for_low_degree_polynomials(
        xi_max in 1.0f64..50.0,
        panels in 1usize..10,
        c2 in -2.0f64..2.0,
        c5 in -1.0f64..1.0,
    ) {
        let scheme = QuadratureScheme::new(xi_max, panels).unwrap();
        let got = scheme.integrate(|x| c2 * x * x + c5 * x.powi(5));
        let expect = c2 * xi_max.powi(3) / 3.0 + c5 * xi_max.powi(6) / 6.0;
        let scale = expect.abs().max(1.0);
        prop_assert!((got - expect).abs() / scale < 1e-11);
    }

    #[test]
    fn transmission_is_monotone_and_linear(
        p in prop::array::uniform3(0.0f64..0.6),
        c0 in 0.0f64..2.0,
        d1 in 0.0f64..1.0,
        d2 in 0.0f64..1.0,
        bump in 0.0f64..0.5,
    ) {
        // Build an ordered coefficient triple from nonnegative decrements.
        let c = [c0 + d1 + d2, c0 + d1, c0];
        let base = transmission(p, c).unwrap();
        let raised = transmission(p, [c[0] + bump, c[1], c[2]]).unwrap();
        prop_assert!(raised >= base - 1e-15);
        let doubled = transmission([2.0 * p[0] / 2.0, p[1], p[2]], c).unwrap();
        prop_assert!((doubled - base).abs() < 1e-12);
    }

    #[test]
    fn mixture_purity_stays_in_physical_range(
        raw in prop::collection::vec(0.0f64..1.0, 1..20),
    ) {
        let total: f64 = raw.iter().sum();
        prop_assume!(total > 1e-6);
        let pops: Vec<f64> = raw.iter().map(|p| p / total).collect();
        let n = 20;
        let rho = DensityMatrix::from_populations(n, &pops).unwrap();
        let value = purity(&rho);
        prop_assert!(value <= 1.0 + 1e-12);
        prop_assert!(value >= 1.0 / n as f64 - 1e-12);
    }

    #[test]
    fn nnls_solutions_are_feasible_and_kkt_optimal(
        rows in 3usize..8,
        seed in 0u64..5000,
    ) {
        // Deterministic pseudo-random instance from the seed.
        let mut s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(11);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let cols = 3;
        let a: Vec<f64> = (0..rows * cols).map(|_| next() - 0.2).collect();
        let b: Vec<f64> = (0..rows).map(|_| 2.0 * next() - 0.5).collect();
        let (x, residual_sq) = nnls(&a, rows, cols, &b).unwrap();
        for &v in &x {
            prop_assert!(v >= 0.0);
        }
        // KKT: gradient of 1/2 ||Ax-b||^2 is nonnegative at the solution,
        // and complementary with x.
        for j in 0..cols {
            let mut g = 0.0;
            for r in 0..rows {
                let mut resid = -b[r];
                for k in 0..cols {
                    resid += a[r * cols + k] * x[k];
                }
                g += a[r * cols + j] * resid;
            }
            prop_assert!(g > -1e-8, "negative gradient {g} at j={j}");
            if x[j] > 1e-10 {
                prop_assert!(g.abs() < 1e-8, "active gradient {g} with x={}", x[j]);
            }
        }
        // The residual must not beat the unconstrained projection of b.
        prop_assert!(residual_sq >= -1e-12);
    }

    #[test]
    fn coefficient_fit_never_violates_ordering(
        seed in 0u64..5000,
    ) {
        let mut s = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(3);
        let mut next = move || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let m = 6;
        let mut populations = Vec::new();
        let mut t = Vec::new();
        let mut errors = Vec::new();
        for _ in 0..m {
            populations.push([0.7 * next(), 0.5 * next(), 0.3 * next()]);
            t.push(2.0 * next() - 0.5);
            errors.push(0.02 + 0.1 * next());
        }
        let (c, chi2) = constrained_coefficient_fit(&populations, &t, &errors).unwrap();
        prop_assert!(c[0] >= c[1] - 1e-10 && c[1] >= c[2] - 1e-10 && c[2] >= -1e-12);
        prop_assert!(chi2 >= 0.0);
    }
}
