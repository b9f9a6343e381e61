//! `qbounce sweep`: transmission across a drive-frequency or drive-strength
//! range for several couplings.

use std::io::Write;

use anyhow::{anyhow, Context};
use qbounce_core::basis::build_operators;
use qbounce_core::experiment::{populations_for_velocities, transmission};
use rayon::prelude::*;

use crate::config::{parse_sigma_list, resolve_setup, Cli, FileConfig, SweepArgs};
use crate::io::{create, fmt_f64, fmt_sigma};
use crate::{compute_err, usage_err, CliResult};

pub fn run(cli: &Cli, args: &SweepArgs) -> CliResult<()> {
    let file = FileConfig::load(cli)?;
    let setup = resolve_setup(&args.particle, &file)?;
    let ctx = &setup.ctx;

    let sigmas = parse_sigma_list(&args.sigmas)?;
    let velocity = args
        .velocity
        .or_else(|| file.f64("velocity"))
        .unwrap_or(6.58);
    let coefficients = match &args.coefficients {
        Some(v) => [v[0], v[1], v[2]],
        None => [1.46, 0.50, 0.50],
    };
    if args.max < args.min {
        return Err(usage_err(anyhow!(
            "sweep range max {} < min {}",
            args.max,
            args.min
        )));
    }

    // Build the (strength, omega) list for the requested mode.
    let omega03 = ctx.transition_frequency(3, 0);
    let points: Vec<(f64, f64)> = (0..args.points)
        .map(|i| {
            let t = if args.points > 1 {
                i as f64 / (args.points - 1) as f64
            } else {
                0.0
            };
            let value = args.min + (args.max - args.min) * t;
            match args.mode.as_str() {
                "omega" => (args.strength.unwrap_or(2.05e-3), value),
                _ => (value, args.omega.unwrap_or(omega03)),
            }
        })
        .collect();

    // One task per (sigma, point); deterministic order after collection.
    let tasks: Vec<(usize, usize)> = (0..sigmas.len())
        .flat_map(|si| (0..points.len()).map(move |pi| (si, pi)))
        .collect();
    let mut rows: Vec<((usize, usize), [f64; 3])> = tasks
        .par_iter()
        .map(|&(si, pi)| {
            let ops = build_operators(ctx, sigmas[si]).map_err(|e| anyhow!("{e}"))?;
            let pops =
                populations_for_velocities(ctx, &ops, &[velocity], points[pi], &setup.protocol)
                    .map_err(|e| anyhow!("{e}"))?[0];
            Ok(((si, pi), pops))
        })
        .collect::<Result<Vec<_>, anyhow::Error>>()
        .map_err(compute_err)?;
    rows.sort_by_key(|&((si, pi), _)| (si, pi));

    let mut out = create(&args.out)?;
    let body = |out: &mut dyn Write| -> CliResult<()> {
        writeln!(
            out,
            "sigma,strength_m_per_s,omega_rad_per_s,P0,P1,P2,T_model"
        )
        .map_err(|e| usage_err(anyhow!(e)))?;
        for ((si, pi), pops) in &rows {
            let t = transmission(*pops, coefficients).map_err(usage_err)?;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fmt_sigma(sigmas[*si]),
                fmt_f64(points[*pi].0),
                fmt_f64(points[*pi].1),
                fmt_f64(pops[0]),
                fmt_f64(pops[1]),
                fmt_f64(pops[2]),
                fmt_f64(t)
            )
            .map_err(|e| usage_err(anyhow!(e)))?;
        }
        Ok(())
    };
    body(&mut out)?;
    out.flush()
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(usage_err)?;
    Ok(())
}
