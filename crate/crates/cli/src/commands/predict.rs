//! `qbounce predict`: closed-form prediction report as JSON.

use qbounce_core::constants;
use qbounce_core::predictions::build_report;
use serde_json::json;

use crate::config::{resolve_setup, Cli, FileConfig, PredictArgs};
use crate::io::write_json;
use crate::{usage_err, CliResult};

pub fn run(cli: &Cli, args: &PredictArgs) -> CliResult<()> {
    let file = FileConfig::load(cli)?;
    let setup = resolve_setup(&args.particle, &file)?;
    let ctx = &setup.ctx;

    let sigma = args.sigma.or_else(|| file.f64("sigma")).unwrap_or(500.0);
    let r0 = args
        .r0
        .or_else(|| file.f64("r0"))
        .unwrap_or(constants::NUCLEON_RADIUS);
    let delta_t = args.delta_t.or_else(|| file.f64("delta_t"));
    let kappas = if args.kappas.is_empty() {
        vec![constants::PLANCK_MASS / ctx.mass()]
    } else {
        args.kappas.clone()
    };

    let report = build_report(
        ctx,
        &setup.particle_label,
        sigma,
        r0,
        delta_t,
        None,
        &kappas,
    )
    .map_err(usage_err)?;
    let dp_selected = if args.backreaction {
        report.dp_power_backreaction
    } else {
        report.dp_power
    };
    let value = json!({
        "particle": report.particle,
        "mass_kg": report.mass,
        "sigma": report.sigma,
        "entropic_power_W": report.entropic_power,
        "dp_power_W": report.dp_power,
        "dp_power_backreaction_W": report.dp_power_backreaction,
        "dp_power_selected_W": dp_selected,
        "backreaction": args.backreaction,
        "r0_m": report.r0,
        "sigma_energy_match": report.sigma_energy_match,
        "sigma_bound": report.sigma_bound,
        "storage_delta_t_s": report.storage_delta_t,
        "storage_delta_e_J": report.storage_delta_e,
        "scaled_times": report
            .scaled_times
            .iter()
            .map(|(kappa, t)| json!({"kappa": kappa, "t_scaled_s": t}))
            .collect::<Vec<_>>(),
    });
    write_json(&args.out, &value)
}
