//! Argument parsing and the flags-plus-config-file resolution.
//!
//! Long scan jobs are easier to audit from a file, so every shared physics
//! option can come from a flat `key = value` (TOML) file; values given on
//! the command line always win.

use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use qbounce_core::basis::{build_context, BasisContext, Sigma};
use qbounce_core::constants;
use qbounce_core::experiment::ProtocolConfig;

use crate::{usage_err, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "qbounce",
    version,
    about = "Quantum bouncer spectroscopy: simulation, fitting, predictions"
)]
pub struct Cli {
    /// Flat key = value config file; command-line flags win on conflict.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for grid scans (default: one per CPU). `--threads 1`
    /// gives identical results to any other count.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the bouncer spectrum and transition-frequency table.
    Spectrum(SpectrumArgs),
    /// Propagate one drive setting and write the trajectory diagnostics.
    Simulate(SimulateArgs),
    /// Sweep drive frequency or strength across a list of couplings.
    Sweep(SweepArgs),
    /// Fit measured transmissions over the (sigma, velocity) grid.
    Fit(FitArgs),
    /// Write the closed-form prediction report.
    Predict(PredictArgs),
    /// Generate a synthetic transmission dataset.
    Synth(SynthArgs),
}

/// Flags shared by every command that needs a physical context.
#[derive(Debug, Args, Clone)]
pub struct ParticleArgs {
    /// Particle preset: `neutron` or `custom` (custom requires --mass).
    #[arg(long)]
    pub particle: Option<String>,

    /// Particle mass in kg (implies --particle custom).
    #[arg(long)]
    pub mass: Option<f64>,

    /// Gravitational acceleration in m/s^2.
    #[arg(long)]
    pub g: Option<f64>,

    /// Basis truncation (number of bouncer states).
    #[arg(long)]
    pub n_states: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub particle: ParticleArgs,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub particle: ParticleArgs,
    /// Coupling constant, a float or `inf` for conservative gravity.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Horizontal velocity in m/s.
    #[arg(long)]
    pub velocity: Option<f64>,
    /// Drive strength `a*omega` in m/s.
    #[arg(long)]
    pub strength: Option<f64>,
    /// Drive angular frequency in rad/s.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Number of output checkpoints.
    #[arg(long, default_value_t = 200)]
    pub outputs: usize,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub particle: ParticleArgs,
    /// Sweep mode: `omega` (vary drive frequency at fixed strength) or
    /// `strength` (vary strength at fixed frequency).
    #[arg(long, value_parser = ["omega", "strength"])]
    pub mode: String,
    /// Comma-separated couplings, e.g. `250,500,inf`.
    #[arg(long, default_value = "500,inf")]
    pub sigmas: String,
    /// Sweep range minimum (rad/s for omega mode, m/s for strength mode).
    #[arg(long)]
    pub min: f64,
    /// Sweep range maximum.
    #[arg(long)]
    pub max: f64,
    /// Number of sweep points (0 writes only the header).
    #[arg(long, default_value_t = 25)]
    pub points: usize,
    /// Fixed drive strength in m/s (omega mode).
    #[arg(long)]
    pub strength: Option<f64>,
    /// Fixed drive frequency in rad/s (strength mode); defaults to the
    /// 0 -> 3 transition.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Horizontal velocity in m/s.
    #[arg(long)]
    pub velocity: Option<f64>,
    /// Selector coefficients applied to the populations.
    #[arg(long, num_args = 3, value_names = ["C0", "C1", "C2"])]
    pub coefficients: Option<Vec<f64>>,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub particle: ParticleArgs,
    /// Input measurement CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output CSV for the chi-square surface.
    #[arg(long)]
    pub out: PathBuf,
    /// Output JSON summary path (default: `<out>` with `.json`).
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Optional per-record model comparison CSV at the best-fit node: the
    /// input columns plus `P0,P1,P2,T_model`.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Smallest finite sigma of the scan grid.
    #[arg(long, default_value_t = 1e2)]
    pub sigma_min: f64,
    /// Largest finite sigma of the scan grid.
    #[arg(long, default_value_t = 1e3)]
    pub sigma_max: f64,
    /// Number of log-spaced finite sigma nodes; the conservative marker is
    /// always appended.
    #[arg(long, default_value_t = 25)]
    pub sigma_points: usize,
    /// Number of linear velocity nodes across the velocity window.
    #[arg(long, default_value_t = 40)]
    pub velocity_points: usize,
    /// Confidence level for the sigma region.
    #[arg(long, default_value_t = 0.90)]
    pub level: f64,
    /// Override the delta-chi-square threshold (default: one-parameter
    /// profile likelihood at --level, i.e. 2.706 at 0.90).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Directory for cached population matrices; propagation results are
    /// reused across reruns with identical physics.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub particle: ParticleArgs,
    /// Coupling constant (finite).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Diosi-Penrose coarse-graining radius in m.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Storage time in s for the sigma bound (default: neutron lifetime).
    #[arg(long)]
    pub delta_t: Option<f64>,
    /// Doubles the D-P rate per the backreaction extension (reported
    /// alongside the bare rate either way; the flag selects which one the
    /// `dp_power_selected` field carries).
    #[arg(long)]
    pub backreaction: bool,
    /// Mass ratios for the rescaled decoherence times (repeatable;
    /// default: Planck mass over the particle mass).
    #[arg(long = "kappa")]
    pub kappas: Vec<f64>,
    /// Output JSON path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub particle: ParticleArgs,
    /// Generating coupling, a float or `inf`.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Generating velocity in m/s.
    #[arg(long)]
    pub velocity: Option<f64>,
    /// Generating selector coefficients.
    #[arg(long, num_args = 3, value_names = ["C0", "C1", "C2"], default_values_t = [1.46, 0.50, 0.50])]
    pub coefficients: Vec<f64>,
    /// Points per sweep mode (the dataset spans a frequency sweep and a
    /// strength sweep).
    #[arg(long, default_value_t = 10)]
    pub points_per_mode: usize,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Noise amplitude in units of the assumed error bar.
    #[arg(long, default_value_t = 1.0)]
    pub noise_scale: f64,
    /// Assumed transmission error bar.
    #[arg(long, default_value_t = 0.05)]
    pub error: f64,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

/// The config file contents, parsed once.
#[derive(Debug, Default)]
pub struct FileConfig {
    table: toml::Table,
}

impl FileConfig {
    pub fn load(cli: &Cli) -> CliResult<Self> {
        let Some(path) = &cli.config else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))
            .map_err(usage_err)?;
        let table: toml::Table = text
            .parse()
            .with_context(|| format!("parsing config file {}", path.display()))
            .map_err(usage_err)?;
        Ok(FileConfig { table })
    }

    pub fn f64(&self, key: &str) -> Option<f64> {
        match self.table.get(key) {
            Some(toml::Value::Float(v)) => Some(*v),
            Some(toml::Value::Integer(v)) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn usize(&self, key: &str) -> Option<usize> {
        match self.table.get(key) {
            Some(toml::Value::Integer(v)) if *v >= 0 => Some(*v as usize),
            _ => None,
        }
    }

    pub fn u64(&self, key: &str) -> Option<u64> {
        match self.table.get(key) {
            Some(toml::Value::Integer(v)) if *v >= 0 => Some(*v as u64),
            _ => None,
        }
    }

    pub fn string(&self, key: &str) -> Option<String> {
        match self.table.get(key) {
            Some(toml::Value::String(v)) => Some(v.clone()),
            Some(toml::Value::Float(v)) => Some(format!("{v}")),
            Some(toml::Value::Integer(v)) => Some(format!("{v}")),
            _ => None,
        }
    }
}

/// Fully resolved physics setup shared by all commands.
pub struct Setup {
    pub ctx: BasisContext,
    pub protocol: ProtocolConfig,
    pub particle_label: String,
}

/// Resolves particle flags + config file into a basis context. Flag wins,
/// then file key, then default.
pub fn resolve_setup(particle: &ParticleArgs, file: &FileConfig) -> CliResult<Setup> {
    let label = particle
        .particle
        .clone()
        .or_else(|| file.string("particle"))
        .unwrap_or_else(|| "neutron".into());
    let mass_flag = particle.mass.or_else(|| file.f64("mass"));
    let mass = match (label.as_str(), mass_flag) {
        ("neutron", None) => constants::NEUTRON_MASS,
        ("neutron", Some(m)) => {
            return Err(usage_err(anyhow!(
                "--mass {m} conflicts with --particle neutron; use --particle custom"
            )))
        }
        ("custom", Some(m)) => m,
        ("custom", None) => return Err(usage_err(anyhow!("--particle custom requires --mass"))),
        (other, _) => {
            return Err(usage_err(anyhow!(
                "unknown particle preset '{other}' (expected neutron|custom)"
            )))
        }
    };
    let g = particle
        .g
        .or_else(|| file.f64("g"))
        .unwrap_or(constants::STANDARD_GRAVITY);
    let n_states = particle
        .n_states
        .or_else(|| file.usize("n_states"))
        .unwrap_or(20);
    let ctx = build_context(mass, g, n_states).map_err(usage_err)?;

    let mut protocol = ProtocolConfig::default();
    if let Some(length) = file.f64("flight_length") {
        protocol.flight_length = length;
    }
    if let (Some(lo), Some(hi)) = (file.f64("velocity_min"), file.f64("velocity_max")) {
        protocol.velocity_bounds = (lo, hi);
    }
    protocol.validate().map_err(usage_err)?;
    Ok(Setup {
        ctx,
        protocol,
        particle_label: label,
    })
}

/// Parses a sigma value: a positive float or `inf`.
pub fn parse_sigma(text: &str) -> CliResult<Sigma> {
    let trimmed = text.trim();
    if trimmed.eq_ignore_ascii_case("inf") || trimmed.eq_ignore_ascii_case("infinity") {
        return Ok(Sigma::Infinite);
    }
    let value: f64 = trimmed
        .parse()
        .with_context(|| format!("invalid sigma '{trimmed}' (expected float or 'inf')"))
        .map_err(usage_err)?;
    if value.is_nan() || value <= 0.0 {
        return Err(usage_err(anyhow!("sigma must be positive, got {value}")));
    }
    Ok(Sigma::Finite(value))
}

/// Parses a comma-separated sigma list.
pub fn parse_sigma_list(text: &str) -> CliResult<Vec<Sigma>> {
    text.split(',').map(parse_sigma).collect()
}
