//! `qbounce synth`: synthetic transmission dataset spanning a frequency
//! sweep and a strength sweep around the 0 -> 3 resonance.

use anyhow::anyhow;
use qbounce_core::experiment::generate_synthetic_dataset;

use crate::config::{parse_sigma, resolve_setup, Cli, FileConfig, SynthArgs};
use crate::io::write_records;
use crate::{compute_err, usage_err, CliResult};

pub fn run(cli: &Cli, args: &SynthArgs) -> CliResult<()> {
    let file = FileConfig::load(cli)?;
    let setup = resolve_setup(&args.particle, &file)?;
    let ctx = &setup.ctx;

    let sigma_text = args
        .sigma
        .clone()
        .or_else(|| file.string("sigma"))
        .unwrap_or_else(|| "500".into());
    let sigma = parse_sigma(&sigma_text)?;
    let velocity = args
        .velocity
        .or_else(|| file.f64("velocity"))
        .unwrap_or(6.58);
    let seed = args.seed.or_else(|| file.u64("seed")).unwrap_or(0);
    let c = [
        args.coefficients[0],
        args.coefficients[1],
        args.coefficients[2],
    ];
    if args.points_per_mode == 0 {
        return Err(usage_err(anyhow!("--points-per-mode must be at least 1")));
    }

    // Frequency sweep at the experimental strength, then a strength sweep on
    // the 0 -> 3 resonance.
    let omega03 = ctx.transition_frequency(3, 0);
    let m = args.points_per_mode;
    let mut grid: Vec<(f64, f64)> = Vec::with_capacity(2 * m);
    for i in 0..m {
        let t = if m > 1 {
            i as f64 / (m - 1) as f64
        } else {
            0.5
        };
        grid.push((2.05e-3, 2.6e3 + 2.8e3 * t));
    }
    for i in 0..m {
        let t = if m > 1 {
            i as f64 / (m - 1) as f64
        } else {
            0.5
        };
        grid.push((4.0e-4 + 3.6e-3 * t, omega03));
    }

    let records = generate_synthetic_dataset(
        ctx,
        sigma,
        velocity,
        c,
        &grid,
        seed,
        args.noise_scale,
        args.error,
        &setup.protocol,
    )
    .map_err(|e| compute_err(anyhow!("{e}")))?;
    write_records(&args.out, &records)
}
