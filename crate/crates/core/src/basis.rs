//! Truncated quantum-bouncer eigenbasis and the unitless operator matrices.
//!
//! A particle of mass `m` above a mirror in a linear potential has
//! eigenfunctions `Ai(xi + a_{j+1}) / (sqrt(x0) N_j)` with `xi = x / x0`,
//! `a_j` the j-th negative Airy zero, and characteristic length
//! `x0 = (hbar^2 / (2 m^2 g))^(1/3)`. Energies are `E_j = -m g x0 a_{j+1}`
//! and the natural unitless time is `tau = t m g x0 / hbar`.
//!
//! In that basis every operator of the driven problem is a dense matrix of
//! Airy overlap integrals divided by the norms `N_j N_k`:
//!
//! * `xi_jk` — unitless position,
//! * `h_jk = -a_{j+1} d_jk - xi_jk` — kinetic-plus-boundary,
//! * `W_jk` — the `Ai Ai'` drive integral (the oscillating-mirror term is
//!   `i c(tau) W` with the scalar [`drive_coefficient`]),
//! * `D_jk(sigma)` — the displacement dissipator, kept internally as the
//!   deviation `Delta = D - 1` so the large-`sigma` master equation can be
//!   evaluated without catastrophic cancellation,
//! * `p_jk` and the boundary-curvature matrix for diagnostics.

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
// Float supplies the no_std math methods; when std ends up linked
// elsewhere in the build graph its inherent methods shadow the trait,
// so the import sits unused in those configurations.
#[allow(unused_imports)]
use num_traits::Float;

use crate::airy::{self, AiryError, AiryZeroTable};
use crate::constants;
use crate::linalg::CMatrix;
use crate::quadrature::{AiryNodeTable, QuadratureError, QuadratureScheme, TAIL_TOLERANCE};

/// Largest supported truncation.
pub const MAX_STATES: usize = 50;

/// Entropic coupling constant, or the conservative-limit marker.
///
/// `sigma -> infinity` reproduces conservative gravity; that limit gets an
/// explicit marker instead of a huge float so nothing downstream silently
/// loses precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sigma {
    Finite(f64),
    Infinite,
}

impl Sigma {
    pub fn finite(self) -> Option<f64> {
        match self {
            Sigma::Finite(s) => Some(s),
            Sigma::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Sigma::Finite(_))
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Finite(s) => write!(f, "{s}"),
            Sigma::Infinite => write!(f, "inf"),
        }
    }
}

/// Errors from basis construction.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisError {
    NonPositiveMass(f64),
    NonPositiveGravity(f64),
    /// `n_states` outside `1..=MAX_STATES`.
    BadStateCount(usize),
    NonPositiveSigma(f64),
    NonPositiveKappa(f64),
    Airy(AiryError),
    Quadrature(QuadratureError),
}

impl fmt::Display for BasisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisError::NonPositiveMass(m) => write!(f, "mass must be positive, got {m} kg"),
            BasisError::NonPositiveGravity(g) => {
                write!(
                    f,
                    "gravitational acceleration must be positive, got {g} m/s^2"
                )
            }
            BasisError::BadStateCount(n) => {
                write!(f, "n_states must be in 1..={MAX_STATES}, got {n}")
            }
            BasisError::NonPositiveSigma(s) => write!(f, "sigma must be positive, got {s}"),
            BasisError::NonPositiveKappa(k) => write!(f, "mass ratio must be positive, got {k}"),
            BasisError::Airy(e) => write!(f, "airy evaluation failed: {e}"),
            BasisError::Quadrature(e) => write!(f, "quadrature failed: {e}"),
        }
    }
}

impl core::error::Error for BasisError {}

impl From<AiryError> for BasisError {
    fn from(e: AiryError) -> Self {
        BasisError::Airy(e)
    }
}

impl From<QuadratureError> for BasisError {
    fn from(e: QuadratureError) -> Self {
        BasisError::Quadrature(e)
    }
}

/// Particle constants, derived scales and the truncated eigenbasis data.
#[derive(Debug, Clone)]
pub struct BasisContext {
    mass: f64,
    gravity_accel: f64,
    hbar: f64,
    x0: f64,
    energy_scale: f64,
    time_scale: f64,
    n_states: usize,
    zeros: AiryZeroTable,
    norms: Vec<f64>,
}

impl BasisContext {
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gravity_accel(&self) -> f64 {
        self.gravity_accel
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// Characteristic length `x0` in m.
    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// `m g x0` in J; one unitless energy unit.
    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    /// `hbar / (m g x0)` in s; one unitless time unit.
    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn zeros(&self) -> &AiryZeroTable {
        &self.zeros
    }

    /// Eigenfunction norms `N_j` (dimensionless).
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// `E_j = -m g x0 a_{j+1}` in J.
    pub fn energy(&self, j: usize) -> f64 {
        -self.zeros.zero(j) * self.energy_scale
    }

    /// `omega_jk = (E_j - E_k) / hbar` in rad/s.
    pub fn transition_frequency(&self, j: usize, k: usize) -> f64 {
        (self.energy(j) - self.energy(k)) / self.hbar
    }
}

/// Builds the eigenbasis context for a particle.
pub fn build_context(
    mass: f64,
    gravity_accel: f64,
    n_states: usize,
) -> Result<BasisContext, BasisError> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(BasisError::NonPositiveMass(mass));
    }
    if !(gravity_accel > 0.0) || !gravity_accel.is_finite() {
        return Err(BasisError::NonPositiveGravity(gravity_accel));
    }
    if n_states == 0 || n_states > MAX_STATES {
        return Err(BasisError::BadStateCount(n_states));
    }
    let hbar = constants::HBAR;
    let x0 = (hbar * hbar / (2.0 * mass * mass * gravity_accel)).powf(1.0 / 3.0);
    let energy_scale = mass * gravity_accel * x0;
    let time_scale = hbar / energy_scale;
    let zeros = airy::airy_zeros(n_states)?;
    let scheme = QuadratureScheme::for_basis(&zeros);
    let mut norms = Vec::with_capacity(n_states);
    for j in 0..n_states {
        let overlap = crate::quadrature::airy_overlap(
            j,
            j,
            crate::quadrature::OverlapWeight::One,
            &zeros,
            &scheme,
        )?;
        norms.push(overlap.re.sqrt());
    }
    Ok(BasisContext {
        mass,
        gravity_accel,
        hbar,
        x0,
        energy_scale,
        time_scale,
        n_states,
        zeros,
        norms,
    })
}

/// Convenience constructor for the ultra-cold neutron presets.
pub fn neutron_context(n_states: usize) -> Result<BasisContext, BasisError> {
    build_context(
        constants::NEUTRON_MASS,
        constants::STANDARD_GRAVITY,
        n_states,
    )
}

/// Rescales the context to mass `kappa * m` and returns it together with the
/// decoherence time ratio `kappa^(-1/3)`.
///
/// The unitless operator matrices of the rescaled context are identical to
/// the original ones; only the physical time and length scales move.
pub fn mass_scaled_context(
    ctx: &BasisContext,
    kappa: f64,
) -> Result<(BasisContext, f64), BasisError> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(BasisError::NonPositiveKappa(kappa));
    }
    let scaled = build_context(ctx.mass * kappa, ctx.gravity_accel, ctx.n_states)?;
    Ok((scaled, kappa.powf(-1.0 / 3.0)))
}

/// The unitless operator matrices of one `(basis, sigma)` configuration.
///
/// All matrices are stored dense and complex for uniform handling; `h`,
/// `xi`, `drive_integral` and `boundary_curvature` carry exactly zero
/// imaginary parts.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    n: usize,
    sigma: Sigma,
    /// `-a_{j+1}` for each state; `h + xi` is this diagonal.
    eigen_diag: Vec<f64>,
    h: CMatrix,
    xi: CMatrix,
    /// The raw `Ai Ai'` overlap matrix `W`; the drive term at time `tau` is
    /// `i * drive_coefficient * W`.
    drive_integral: CMatrix,
    /// `Delta = D - 1` for finite sigma; `None` in conservative mode.
    dissipator_delta: Option<CMatrix>,
    /// Momentum in units `hbar / x0`: `p = -i W`.
    momentum: CMatrix,
    /// `Ai'(a_{j+1}) Ai'(a_{k+1}) / (N_j N_k)`, entrywise `(-1)^(j-k)`.
    boundary_curvature: CMatrix,
}

impl OperatorSet {
    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    /// `-a_{j+1}` diagonal (the `h + xi` spectrum in unitless energy).
    pub fn eigen_diag(&self) -> &[f64] {
        &self.eigen_diag
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn xi(&self) -> &CMatrix {
        &self.xi
    }

    pub fn drive_integral(&self) -> &CMatrix {
        &self.drive_integral
    }

    /// Deviation `Delta = D - 1` of the dissipator from the identity, or
    /// `None` in conservative mode.
    pub fn dissipator_delta(&self) -> Option<&CMatrix> {
        self.dissipator_delta.as_ref()
    }

    /// The full dissipator matrix `D = 1 + Delta` (identity when
    /// conservative).
    pub fn dissipator(&self) -> CMatrix {
        let mut d = CMatrix::identity(self.n);
        if let Some(delta) = &self.dissipator_delta {
            d.axpy(Complex64::new(1.0, 0.0), delta);
        }
        d
    }

    pub fn momentum(&self) -> &CMatrix {
        &self.momentum
    }

    pub fn boundary_curvature(&self) -> &CMatrix {
        &self.boundary_curvature
    }
}

/// Builds every unitless operator matrix for the given coupling.
pub fn build_operators(ctx: &BasisContext, sigma: Sigma) -> Result<OperatorSet, BasisError> {
    if let Sigma::Finite(s) = sigma {
        if !(s > 0.0) || !s.is_finite() {
            return Err(BasisError::NonPositiveSigma(s));
        }
    }
    let n = ctx.n_states;
    let zeros = &ctx.zeros;
    let scheme = match sigma {
        Sigma::Finite(s) => QuadratureScheme::for_basis_with_phase(zeros, s),
        Sigma::Infinite => QuadratureScheme::for_basis(zeros),
    };
    // The deepest shift has the slowest-decaying tail; fail loudly if the
    // cutoff is somehow insufficient.
    let worst_tail = airy::ai_pair(scheme.xi_max() + zeros.zero(n - 1)).0.abs();
    if worst_tail > TAIL_TOLERANCE {
        return Err(BasisError::Quadrature(QuadratureError::TailNotDecayed {
            xi_max: scheme.xi_max(),
            shift: zeros.zero(n - 1),
            magnitude: worst_tail,
        }));
    }

    let table = AiryNodeTable::build(zeros, &scheme);
    let weights = scheme.weights();
    let nodes = scheme.nodes();
    let inv_norm: Vec<f64> = ctx.norms.iter().map(|n| 1.0 / n).collect();

    let mut xi = CMatrix::zeros(n);
    for j in 0..n {
        for k in j..n {
            let mut acc = 0.0;
            for q in 0..nodes.len() {
                acc += weights[q] * nodes[q] * table.ai[j][q] * table.ai[k][q];
            }
            let v = Complex64::new(acc * inv_norm[j] * inv_norm[k], 0.0);
            xi[(j, k)] = v;
            xi[(k, j)] = v;
        }
    }

    let eigen_diag: Vec<f64> = (0..n).map(|j| -zeros.zero(j)).collect();
    let mut h = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            let diag = if j == k { eigen_diag[j] } else { 0.0 };
            h[(j, k)] = Complex64::new(diag, 0.0) - xi[(j, k)];
        }
    }

    let mut drive_integral = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            let mut acc = 0.0;
            for (q, &w) in weights.iter().enumerate() {
                acc += w * table.ai[j][q] * table.aip[k][q];
            }
            drive_integral[(j, k)] = Complex64::new(acc * inv_norm[j] * inv_norm[k], 0.0);
        }
    }

    let dissipator_delta = match sigma {
        Sigma::Infinite => None,
        Sigma::Finite(s) => {
            let mut delta = CMatrix::zeros(n);
            // exp(-i xi / sigma) - 1 evaluated in expm1 form so entries stay
            // accurate when sigma is huge: re = -2 sin^2(xi / 2 sigma),
            // im = -sin(xi / sigma).
            let phase: Vec<Complex64> = nodes
                .iter()
                .map(|&x| {
                    let half = (0.5 * x / s).sin();
                    Complex64::new(-2.0 * half * half, -(x / s).sin())
                })
                .collect();
            for j in 0..n {
                for k in j..n {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for q in 0..nodes.len() {
                        acc += phase[q] * (weights[q] * table.ai[j][q] * table.ai[k][q]);
                    }
                    let v = acc * (inv_norm[j] * inv_norm[k]);
                    delta[(j, k)] = v;
                    delta[(k, j)] = v; // the integrand is j <-> k symmetric
                }
            }
            Some(delta)
        }
    };

    let mut momentum = CMatrix::zeros(n);
    for j in 0..n {
        for k in 0..n {
            momentum[(j, k)] = Complex64::new(0.0, -1.0) * drive_integral[(j, k)];
        }
    }

    let mut boundary_curvature = CMatrix::zeros(n);
    let derivs: Vec<f64> = (0..n).map(|j| airy::ai_pair(zeros.zero(j)).1).collect();
    for j in 0..n {
        for k in 0..n {
            boundary_curvature[(j, k)] =
                Complex64::new(derivs[j] * derivs[k] * inv_norm[j] * inv_norm[k], 0.0);
        }
    }

    Ok(OperatorSet {
        n,
        sigma,
        eigen_diag,
        h,
        xi,
        drive_integral,
        dissipator_delta,
        momentum,
        boundary_curvature,
    })
}

/// The scalar drive prefactor `(4 m / (hbar g))^(1/3) (a w) cos(w t)` at
/// unitless time `tau` (`t = tau * time_scale`); the full drive matrix is
/// `i * coefficient * drive_integral`.
pub fn drive_coefficient(ctx: &BasisContext, strength: f64, omega: f64, tau: f64) -> f64 {
    debug_assert!(strength >= 0.0 && omega > 0.0);
    let prefactor = (4.0 * ctx.mass / (ctx.hbar * ctx.gravity_accel)).powf(1.0 / 3.0);
    prefactor * strength * (omega * tau * ctx.time_scale).cos()
}
