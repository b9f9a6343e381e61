//! `qbounce spectrum`: eigenvalue table and transition-frequency matrix.

use std::io::Write;

use anyhow::{anyhow, Context};
use qbounce_core::constants;

use crate::config::{resolve_setup, Cli, FileConfig, SpectrumArgs};
use crate::io::{create, fmt_f64};
use crate::{usage_err, CliResult};

pub fn run(cli: &Cli, args: &SpectrumArgs) -> CliResult<()> {
    let file = FileConfig::load(cli)?;
    let setup = resolve_setup(&args.particle, &file)?;
    let ctx = &setup.ctx;
    let n = ctx.n_states();

    let mut out = create(&args.out)?;
    let body = |out: &mut dyn Write| -> std::io::Result<()> {
        // Header: per-state data then the full transition matrix row
        // omega_{n,k} = (E_n - E_k) / hbar.
        write!(out, "n,a,energy_peV")?;
        for k in 0..n {
            write!(out, ",omega_{k}_rad_per_s")?;
        }
        writeln!(out)?;
        for j in 0..n {
            let energy_pev = ctx.energy(j) / constants::ELECTRON_VOLT * 1e12;
            write!(
                out,
                "{j},{},{}",
                fmt_f64(ctx.zeros().zero(j)),
                fmt_f64(energy_pev)
            )?;
            for k in 0..n {
                write!(out, ",{}", fmt_f64(ctx.transition_frequency(j, k)))?;
            }
            writeln!(out)?;
        }
        Ok(())
    };
    body(&mut out)
        .with_context(|| format!("writing {}", args.out.display()))
        .map_err(usage_err)?;
    out.flush().map_err(|e| usage_err(anyhow!(e)))?;
    Ok(())
}
