//! End-to-end fitting pipeline on a short mirror: synthetic data through the
//! serial scan, node recovery, and the conservative-limit equivalences.

use qbounce_core::basis::{neutron_context, Sigma};
use qbounce_core::experiment::{generate_synthetic_dataset, ProtocolConfig};
use qbounce_core::fitting::{confidence_region, population_matrix, scan};

fn short_protocol() -> ProtocolConfig {
    // A 5 cm mirror keeps flight times (and test runtime) short without
    // changing any of the structure under test.
    ProtocolConfig {
        flight_length: 0.05,
        ..ProtocolConfig::default()
    }
}

#[test]
fn noiseless_scan_recovers_the_generating_node() {
    let ctx = neutron_context(20).unwrap();
    let protocol = short_protocol();
    let omega03 = ctx.transition_frequency(3, 0);
    let grid = [
        (2.05e-3, omega03),
        (2.05e-3, omega03 - 800.0),
        (3.5e-3, omega03),
        (1.0e-3, omega03 + 500.0),
    ];
    let c_true = [1.46, 0.50, 0.50];
    let records = generate_synthetic_dataset(
        &ctx,
        Sigma::Finite(500.0),
        9.0,
        c_true,
        &grid,
        11,
        0.0,
        0.05,
        &protocol,
    )
    .unwrap();

    let sigma_grid = [Sigma::Finite(500.0), Sigma::Finite(1e9), Sigma::Infinite];
    let velocity_grid = [8.5, 9.0, 9.5];
    let surface = scan(&ctx, &records, &sigma_grid, &velocity_grid, &protocol).unwrap();

    let best = surface.best();
    assert!(best.chi2 < 1e-12, "chi2_min = {}", best.chi2);
    assert_eq!(best.sigma, Sigma::Finite(500.0));
    assert!((best.velocity - 9.0).abs() < 1e-12);
    for (got, want) in best.coefficients.iter().zip(&c_true) {
        assert!((got - want).abs() < 1e-6);
    }

    // The sigma = 1e9 column must match the conservative one to 1e-4
    // relative: the infinity marker is the analytic limit of the entropic
    // path.
    let profile = surface.profile();
    let huge = profile[1].unwrap().0;
    let cons = profile[2].unwrap().0;
    assert!(
        (huge / cons - 1.0).abs() < 1e-4,
        "chi2(1e9) = {huge} vs conservative {cons}"
    );

    // With residuals this small every sigma sits inside the 90% region.
    let region = confidence_region(&surface, 0.90).unwrap();
    assert_eq!(region.members.len(), 2);
    assert_eq!(region.sigma_lower_bound, Some(500.0));
}

#[test]
fn scan_is_deterministic() {
    let ctx = neutron_context(20).unwrap();
    let protocol = short_protocol();
    let omega03 = ctx.transition_frequency(3, 0);
    let grid = [(2.05e-3, omega03), (1.0e-3, omega03 + 500.0)];
    let records = generate_synthetic_dataset(
        &ctx,
        Sigma::Finite(500.0),
        9.5,
        [1.2, 0.6, 0.3],
        &grid,
        3,
        1.0,
        0.05,
        &protocol,
    )
    .unwrap();
    let sigma_grid = [Sigma::Finite(400.0), Sigma::Infinite];
    let velocity_grid = [9.0, 9.5];
    let a = scan(&ctx, &records, &sigma_grid, &velocity_grid, &protocol).unwrap();
    let b = scan(&ctx, &records, &sigma_grid, &velocity_grid, &protocol).unwrap();
    for si in 0..sigma_grid.len() {
        for vi in 0..velocity_grid.len() {
            let x = a.nodes[si][vi].unwrap();
            let y = b.nodes[si][vi].unwrap();
            assert_eq!(x.chi2.to_bits(), y.chi2.to_bits());
            for k in 0..3 {
                assert_eq!(x.coefficients[k].to_bits(), y.coefficients[k].to_bits());
            }
        }
    }
}

#[test]
fn zero_strength_rows_reproduce_the_initial_mixture() {
    let ctx = neutron_context(20).unwrap();
    let protocol = short_protocol();
    let records = vec![
        qbounce_core::experiment::MeasurementRecord::new(0.0, 4.07e3, 1.0, 0.05).unwrap(),
        qbounce_core::experiment::MeasurementRecord::new(0.0, 2.0e3, 1.0, 0.05).unwrap(),
    ];
    let rows = population_matrix(&ctx, Sigma::Infinite, 9.5, &records, &protocol).unwrap();
    for row in rows {
        assert!((row[0] - 0.597).abs() < 1e-6);
        assert!((row[1] - 0.340).abs() < 1e-6);
        assert!((row[2] - 0.063).abs() < 1e-6);
        assert!(row.iter().sum::<f64>() <= 1.0 + 1e-4);
    }
}
