//! `qbounce fit`: chi-square scan of measured transmissions over the
//! `(sigma, velocity)` grid, with the confidence region in sigma.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use qbounce_core::basis::{build_operators, Sigma};
use qbounce_core::experiment::populations_for_velocities;
use qbounce_core::fitting::{
    chi2_quantile_1df, confidence_region_with_delta, constrained_coefficient_fit, lin_spaced,
    log_spaced, parity_bound, NodeFit, ScanSurface,
};
use rayon::prelude::*;
use serde_json::json;

use crate::cache::PopulationCache;
use crate::config::{resolve_setup, Cli, FileConfig, FitArgs};
use crate::io::{create, fmt_f64, fmt_sigma, read_records, sigma_json, write_json};
use crate::{compute_err, usage_err, CliResult};

/// Populations per velocity for one `(sigma, record)` pair, or the failure
/// text for that pair.
type NodeRows = Result<Vec<[f64; 3]>, String>;

pub fn run(cli: &Cli, args: &FitArgs) -> CliResult<()> {
    let file = FileConfig::load(cli)?;
    let setup = resolve_setup(&args.particle, &file)?;
    let ctx = &setup.ctx;
    let protocol = &setup.protocol;

    // Validate everything before any propagation starts.
    let records = read_records(&args.data)?;
    if records.is_empty() {
        return Err(usage_err(anyhow!("{}: no data rows", args.data.display())));
    }
    if !(args.sigma_min > 0.0 && args.sigma_max > args.sigma_min) {
        return Err(usage_err(anyhow!(
            "bad sigma range [{}, {}]",
            args.sigma_min,
            args.sigma_max
        )));
    }
    if args.sigma_points < 2 || args.velocity_points < 2 {
        return Err(usage_err(anyhow!("need at least 2 grid points per axis")));
    }
    let delta = match args.delta {
        Some(d) if d > 0.0 => d,
        Some(d) => return Err(usage_err(anyhow!("--delta must be positive, got {d}"))),
        None => chi2_quantile_1df(args.level).map_err(usage_err)?,
    };

    let mut sigma_grid: Vec<Sigma> = log_spaced(args.sigma_min, args.sigma_max, args.sigma_points)
        .into_iter()
        .map(Sigma::Finite)
        .collect();
    sigma_grid.push(Sigma::Infinite);
    let (v_lo, v_hi) = protocol.velocity_bounds;
    let velocity_grid = lin_spaced(v_lo, v_hi, args.velocity_points);

    let cache = match &args.cache {
        Some(dir) => Some(
            PopulationCache::new(dir)
                .with_context(|| format!("creating cache dir {}", dir.display()))
                .map_err(usage_err)?,
        ),
        None => None,
    };

    // Populations per (sigma, record, velocity), parallel over
    // (sigma, record) with one shared propagation per pair.
    let tasks: Vec<(usize, usize)> = (0..sigma_grid.len())
        .flat_map(|si| (0..records.len()).map(move |ri| (si, ri)))
        .collect();
    let results: Vec<((usize, usize), NodeRows)> = tasks
        .par_iter()
        .map(|&(si, ri)| {
            let sigma = sigma_grid[si];
            let record = &records[ri];
            if let Some(cache) = &cache {
                if let Some(rows) = cache.load(ctx, protocol, sigma, &velocity_grid, record) {
                    return ((si, ri), Ok(rows));
                }
            }
            let computed = build_operators(ctx, sigma)
                .map_err(|e| e.to_string())
                .and_then(|ops| {
                    populations_for_velocities(
                        ctx,
                        &ops,
                        &velocity_grid,
                        (record.strength, record.omega),
                        protocol,
                    )
                    .map_err(|e| e.to_string())
                });
            if let (Some(cache), Ok(rows)) = (&cache, &computed) {
                cache.store(ctx, protocol, sigma, &velocity_grid, record, rows);
            }
            ((si, ri), computed)
        })
        .collect();

    let mut tensor: Vec<Vec<Option<Vec<[f64; 3]>>>> =
        vec![vec![None; records.len()]; sigma_grid.len()];
    let mut failures: Vec<String> = Vec::new();
    for ((si, ri), outcome) in results {
        match outcome {
            Ok(rows) => tensor[si][ri] = Some(rows),
            Err(why) => failures.push(format!(
                "sigma {} record {}: {why}",
                fmt_sigma(sigma_grid[si]),
                ri
            )),
        }
    }

    // Inner coefficient fits; a sigma whose tensor is incomplete is invalid
    // at every velocity.
    let t_exp: Vec<f64> = records.iter().map(|r| r.transmission).collect();
    let errors: Vec<f64> = records.iter().map(|r| r.error).collect();
    let nodes: Vec<Vec<Option<NodeFit>>> = (0..sigma_grid.len())
        .map(|si| {
            let complete = tensor[si].iter().all(Option::is_some);
            (0..velocity_grid.len())
                .map(|vi| {
                    if !complete {
                        return None;
                    }
                    let pops: Vec<[f64; 3]> = tensor[si]
                        .iter()
                        .map(|rows| rows.as_ref().expect("checked complete")[vi])
                        .collect();
                    constrained_coefficient_fit(&pops, &t_exp, &errors)
                        .ok()
                        .map(|(coefficients, chi2)| NodeFit { coefficients, chi2 })
                })
                .collect()
        })
        .collect();
    let surface = ScanSurface::from_nodes(sigma_grid, velocity_grid, nodes, records.len())
        .map_err(|e| compute_err(anyhow!("{e}")))?;

    write_surface_csv(&args.out, &surface)?;

    let region = confidence_region_with_delta(&surface, args.level, delta)
        .map_err(|e| compute_err(anyhow!("{e}")))?;
    let best = surface.best();

    // Optional per-record comparison at the best-fit node: the input columns
    // plus the model populations and transmission.
    if let Some(model_path) = &args.model_out {
        let si = surface
            .sigma_grid
            .iter()
            .position(|s| *s == best.sigma)
            .expect("best node is on the grid");
        let vi = surface
            .velocity_grid
            .iter()
            .position(|v| *v == best.velocity)
            .expect("best node is on the grid");
        let mut out = create(model_path)?;
        let body = |out: &mut dyn Write| -> std::io::Result<()> {
            writeln!(out, "{},P0,P1,P2,T_model", crate::io::RECORD_HEADER)?;
            for (ri, record) in records.iter().enumerate() {
                let pops = tensor[si][ri].as_ref().expect("best sigma is complete")[vi];
                let t_model: f64 =
                    pops.iter().zip(&best.coefficients).map(|(p, c)| p * c).sum();
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{}",
                    fmt_f64(record.strength),
                    fmt_f64(record.omega),
                    fmt_f64(record.transmission),
                    fmt_f64(record.error),
                    fmt_f64(pops[0]),
                    fmt_f64(pops[1]),
                    fmt_f64(pops[2]),
                    fmt_f64(t_model)
                )?;
            }
            Ok(())
        };
        body(&mut out)
            .with_context(|| format!("writing {}", model_path.display()))
            .map_err(usage_err)?;
        out.flush().map_err(|e| usage_err(anyhow!(e)))?;
    }
    let summary_path = args
        .summary
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.json", args.out.display())));
    let summary = json!({
        "chi2_min": surface.chi2_min(),
        "best": {
            "sigma": sigma_json(best.sigma),
            "velocity": best.velocity,
            "c0": best.coefficients[0],
            "c1": best.coefficients[1],
            "c2": best.coefficients[2],
        },
        "confidence_level": args.level,
        "delta_chi2": delta,
        "sigma_lower_bound": region.sigma_lower_bound,
        "sigma_region": region.members,
        "parity_sigma_bound": parity_bound(&surface),
        "conservative_chi2": surface.conservative_chi2(),
        "n_points": records.len(),
        "underdetermined": records.len() < 3,
        "failed_nodes": failures,
    });
    write_json(&summary_path, &summary)?;
    Ok(())
}

fn write_surface_csv(path: &std::path::Path, surface: &ScanSurface) -> CliResult<()> {
    let mut out = create(path)?;
    let body = |out: &mut dyn Write| -> std::io::Result<()> {
        writeln!(out, "sigma,velocity,c0,c1,c2,chi2")?;
        for (si, sigma) in surface.sigma_grid.iter().enumerate() {
            for (vi, velocity) in surface.velocity_grid.iter().enumerate() {
                if let Some(node) = &surface.nodes[si][vi] {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        fmt_sigma(*sigma),
                        fmt_f64(*velocity),
                        fmt_f64(node.coefficients[0]),
                        fmt_f64(node.coefficients[1]),
                        fmt_f64(node.coefficients[2]),
                        fmt_f64(node.chi2)
                    )?;
                }
            }
        }
        Ok(())
    };
    body(&mut out)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(usage_err)?;
    out.flush().map_err(|e| usage_err(anyhow!(e)))?;
    Ok(())
}
