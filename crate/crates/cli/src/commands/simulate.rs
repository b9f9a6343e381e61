//! `qbounce simulate`: one drive setting, full trajectory diagnostics.

use std::io::Write;

use anyhow::{anyhow, Context};
use qbounce_core::basis::build_operators;
use qbounce_core::dynamics::{propagate_with, Drive, DynamicsError, Mode, Propagator};
use qbounce_core::experiment::{flight_time, SCAN_TRACE_TOLERANCE};

use crate::config::{parse_sigma, resolve_setup, Cli, FileConfig, SimulateArgs};
use crate::io::{create, fmt_f64};
use crate::{compute_err, usage_err, CliResult};

pub fn run(cli: &Cli, args: &SimulateArgs) -> CliResult<()> {
    let file = FileConfig::load(cli)?;
    let setup = resolve_setup(&args.particle, &file)?;
    let ctx = &setup.ctx;

    let sigma_text = args
        .sigma
        .clone()
        .or_else(|| file.string("sigma"))
        .unwrap_or_else(|| "inf".into());
    let sigma = parse_sigma(&sigma_text)?;
    let velocity = args
        .velocity
        .or_else(|| file.f64("velocity"))
        .unwrap_or(6.58);
    let strength = args
        .strength
        .or_else(|| file.f64("strength"))
        .unwrap_or(0.0);
    let omega = args.omega.or_else(|| file.f64("omega")).unwrap_or(4.07e3);

    let tau_f = flight_time(ctx, velocity, &setup.protocol).map_err(usage_err)?;
    let ops = build_operators(ctx, sigma).map_err(usage_err)?;
    let rho0 = setup
        .protocol
        .initial_state(ctx.n_states())
        .map_err(usage_err)?;
    let drive = if strength == 0.0 {
        Drive::off()
    } else {
        Drive::new(ctx, strength, omega).map_err(usage_err)?
    };
    let mode = if sigma.is_finite() {
        Mode::Entropic
    } else {
        Mode::Conservative
    };
    let propagator =
        Propagator::with_default_step(&drive).with_trace_tolerance(SCAN_TRACE_TOLERANCE);
    let traj = propagate_with(propagator, &ops, mode, &rho0, &drive, tau_f, args.outputs).map_err(
        |e| match e {
            DynamicsError::TraceDrift { .. } | DynamicsError::NegativeEigenvalue { .. } => {
                compute_err(anyhow!("{e}"))
            }
            other => usage_err(anyhow!("{other}")),
        },
    )?;

    let n = ctx.n_states();
    let mut out = create(&args.out)?;
    let body = |out: &mut dyn Write| -> std::io::Result<()> {
        write!(out, "tau")?;
        for j in 0..n {
            write!(out, ",P{j}")?;
        }
        writeln!(out, ",purity,energy_J,trace_drift")?;
        for (i, &tau) in traj.times.iter().enumerate() {
            write!(out, "{}", fmt_f64(tau))?;
            for j in 0..n {
                write!(out, ",{}", fmt_f64(traj.populations[i][j]))?;
            }
            writeln!(
                out,
                ",{},{},{}",
                fmt_f64(traj.purity[i]),
                fmt_f64(traj.energy[i] * ctx.energy_scale()),
                fmt_f64(traj.trace_drift[i])
            )?;
        }
        Ok(())
    };
    body(&mut out)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(usage_err)?;
    out.flush().map_err(|e| usage_err(anyhow!(e)))?;
    Ok(())
}
