//! Closed-form predictions: energy-gain rates, the Diosi-Penrose
//! comparison, storage-experiment bounds on sigma, and mass-rescaled
//! decoherence times.
//!
//! Under the entropic master equation the expected total energy grows at
//! the state-independent rate `g hbar / (2 x0 sigma)`; the Diosi-Penrose
//! collapse model instead gives `m G hbar / (4 sqrt(pi) R0^3)` with
//! coarse-graining radius `R0` (doubled when the semiclassical
//! backreaction extension is included). Equating or bounding these rates
//! converts decoherence experiments into constraints on sigma.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
// Float supplies the no_std math methods; when std ends up linked
// elsewhere in the build graph its inherent methods shadow the trait,
// so the import sits unused in those configurations.
#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::BasisContext;
use crate::constants;

#[derive(Debug, Clone, PartialEq)]
pub enum PredictionError {
    NonPositive { name: &'static str, value: f64 },
}

impl fmt::Display for PredictionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictionError::NonPositive { name, value } => {
                write!(f, "{name} must be positive, got {value}")
            }
        }
    }
}

impl core::error::Error for PredictionError {}

fn require_positive(name: &'static str, value: f64) -> Result<f64, PredictionError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(PredictionError::NonPositive { name, value })
    }
}

/// Entropic energy-gain rate `g hbar / (2 x0 sigma)` in W.
pub fn entropic_power(ctx: &BasisContext, sigma: f64) -> Result<f64, PredictionError> {
    require_positive("sigma", sigma)?;
    Ok(ctx.gravity_accel() * ctx.hbar() / (2.0 * ctx.x0() * sigma))
}

/// Diosi-Penrose energy-gain rate `m G hbar / (4 sqrt(pi) R0^3)` in W;
/// the backreaction flag doubles it exactly.
pub fn dp_power(mass: f64, r0: f64, backreaction: bool) -> Result<f64, PredictionError> {
    require_positive("mass", mass)?;
    require_positive("R0", r0)?;
    let base = mass * constants::GRAVITATIONAL_CONSTANT * constants::HBAR
        / (4.0 * core::f64::consts::PI.sqrt() * r0 * r0 * r0);
    Ok(if backreaction { 2.0 * base } else { base })
}

/// The sigma at which the entropic rate equals a target power:
/// `sigma = g hbar / (2 x0 P)`.
pub fn sigma_from_energy_match(
    ctx: &BasisContext,
    target_power: f64,
) -> Result<f64, PredictionError> {
    require_positive("target power", target_power)?;
    Ok(ctx.gravity_accel() * ctx.hbar() / (2.0 * ctx.x0() * target_power))
}

/// Storage-experiment bound: the sigma at which the energy gained over
/// `delta_t` equals `delta_e`, i.e. `sigma = g hbar delta_t / (2 x0 delta_e)`.
/// Observing the jump within `delta_t` implies sigma at or below this.
pub fn sigma_bound_from_storage(
    ctx: &BasisContext,
    delta_t: f64,
    delta_e: f64,
) -> Result<f64, PredictionError> {
    require_positive("delta_t", delta_t)?;
    require_positive("delta_e", delta_e)?;
    Ok(ctx.gravity_accel() * ctx.hbar() * delta_t / (2.0 * ctx.x0() * delta_e))
}

/// Decoherence time for mass ratio `kappa = M / m`: `t_d * kappa^(-1/3)`.
pub fn decoherence_time_scaled(t_d: f64, kappa: f64) -> Result<f64, PredictionError> {
    require_positive("t_d", t_d)?;
    require_positive("kappa", kappa)?;
    Ok(t_d * kappa.powf(-1.0 / 3.0))
}

/// Bundle of every closed-form prediction for one particle and coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport {
    pub particle: String,
    pub mass: f64,
    pub sigma: f64,
    /// Entropic energy-gain rate, W.
    pub entropic_power: f64,
    /// Diosi-Penrose rate at the configured `R0`, W.
    pub dp_power: f64,
    /// Exactly twice `dp_power`.
    pub dp_power_backreaction: f64,
    /// Coarse-graining radius used for the D-P rates, m.
    pub r0: f64,
    /// Sigma that would match the D-P rate.
    pub sigma_energy_match: f64,
    /// Storage bound from `(delta_t, delta_e)`.
    pub sigma_bound: f64,
    pub storage_delta_t: f64,
    pub storage_delta_e: f64,
    /// `(kappa, t_d * kappa^(-1/3))` for the requested mass ratios, seeded
    /// from the storage time.
    pub scaled_times: Vec<(f64, f64)>,
}

/// Builds the full report. `delta_e` defaults to the first excitation gap
/// `E_1 - E_0` when `None`; `delta_t` defaults to the neutron lifetime.
pub fn build_report(
    ctx: &BasisContext,
    particle: &str,
    sigma: f64,
    r0: f64,
    delta_t: Option<f64>,
    delta_e: Option<f64>,
    kappas: &[f64],
) -> Result<PredictionReport, PredictionError> {
    let delta_t = delta_t.unwrap_or(constants::NEUTRON_LIFETIME);
    let delta_e = delta_e.unwrap_or_else(|| ctx.energy(1) - ctx.energy(0));
    let entropic = entropic_power(ctx, sigma)?;
    let dp = dp_power(ctx.mass(), r0, false)?;
    let dp_back = dp_power(ctx.mass(), r0, true)?;
    let mut scaled_times = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        scaled_times.push((kappa, decoherence_time_scaled(delta_t, kappa)?));
    }
    Ok(PredictionReport {
        particle: String::from(particle),
        mass: ctx.mass(),
        sigma,
        entropic_power: entropic,
        dp_power: dp,
        dp_power_backreaction: dp_back,
        r0,
        sigma_energy_match: sigma_from_energy_match(ctx, dp)?,
        sigma_bound: sigma_bound_from_storage(ctx, delta_t, delta_e)?,
        storage_delta_t: delta_t,
        storage_delta_e: delta_e,
        scaled_times,
    })
}
