//! Order-constrained transmission fits and the chi-square surface over the
//! `(sigma, velocity)` grid.
//!
//! For each grid node the selector coefficients solve
//!
//! ```text
//! min_{c0 >= c1 >= c2 >= 0}  sum_r [T_exp(r) - sum_j c_j P_j(r)]^2 / err(r)^2
//! ```
//!
//! which is turned into plain non-negative least squares by the substitution
//! `c2 = u2, c1 = u2 + u1, c0 = u2 + u1 + u0` with `u >= 0`. The problem is
//! convex with a unique optimal value. Profiling over velocity gives
//! `chi2(sigma) = min_v chi2(sigma, v)`; the confidence region collects
//! every sigma with `chi2(sigma) <= chi2_min + delta(level)`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
// Float supplies the no_std math methods; when std ends up linked
// elsewhere in the build graph its inherent methods shadow the trait,
// so the import sits unused in those configurations.
#[allow(unused_imports)]
use num_traits::Float;

use crate::basis::{build_operators, BasisContext, Sigma};
use crate::experiment::{
    populations_for_velocities, ExperimentError, MeasurementRecord, ProtocolConfig,
};
use crate::nnls::{nnls, NnlsError};

/// Profile-likelihood threshold for one interesting parameter at 90%
/// confidence (`delta chi^2 = 2.706`); other levels go through
/// [`chi2_quantile_1df`].
pub const DELTA_CHI2_90: f64 = 2.706;

/// Relative slack for the conservative-parity bound: the smallest sigma
/// whose chi-square is within this factor of the conservative one.
pub const PARITY_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    /// Fewer records than needed (none at all).
    NoRecords,
    /// Population matrix is identically zero: no information on any
    /// coefficient.
    DegenerateDesign,
    EmptyGrid,
    /// Every grid node failed to simulate.
    AllNodesFailed,
    BadLevel(f64),
    MismatchedLengths {
        populations: usize,
        data: usize,
    },
    Solver(NnlsError),
    Experiment(String),
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::NoRecords => write!(f, "no measurement records"),
            FitError::DegenerateDesign => {
                write!(
                    f,
                    "population matrix has rank < 1; coefficients are unconstrained"
                )
            }
            FitError::EmptyGrid => write!(f, "empty sigma or velocity grid"),
            FitError::AllNodesFailed => write!(f, "every scan node failed to simulate"),
            FitError::BadLevel(l) => write!(f, "confidence level must be in (0, 1), got {l}"),
            FitError::MismatchedLengths { populations, data } => {
                write!(f, "{populations} population rows vs {data} data points")
            }
            FitError::Solver(e) => write!(f, "inner solver failed: {e}"),
            FitError::Experiment(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for FitError {}

impl From<NnlsError> for FitError {
    fn from(e: NnlsError) -> Self {
        FitError::Solver(e)
    }
}

impl From<ExperimentError> for FitError {
    fn from(e: ExperimentError) -> Self {
        FitError::Experiment(alloc::format!("{e}"))
    }
}

/// Best-fit coefficients and goodness of fit at one `(sigma, velocity)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub sigma: Sigma,
    pub velocity: f64,
    pub coefficients: [f64; 3],
    pub chi2: f64,
    pub n_points: usize,
}

/// Final `(P0, P1, P2)` per record at one grid node.
pub fn population_matrix(
    ctx: &BasisContext,
    sigma: Sigma,
    velocity: f64,
    records: &[MeasurementRecord],
    config: &ProtocolConfig,
) -> Result<Vec<[f64; 3]>, FitError> {
    let tensor = population_tensor(ctx, sigma, &[velocity], records, config)?;
    Ok(tensor.into_iter().map(|per_v| per_v[0]).collect())
}

/// Final `(P0, P1, P2)` per record and velocity at one sigma, sharing one
/// propagation per record across all velocities. Indexed
/// `[record][velocity]`.
pub fn population_tensor(
    ctx: &BasisContext,
    sigma: Sigma,
    velocities: &[f64],
    records: &[MeasurementRecord],
    config: &ProtocolConfig,
) -> Result<Vec<Vec<[f64; 3]>>, FitError> {
    if records.is_empty() {
        return Err(FitError::NoRecords);
    }
    if velocities.is_empty() {
        return Err(FitError::EmptyGrid);
    }
    let ops = build_operators(ctx, sigma).map_err(ExperimentError::from)?;
    let mut out = Vec::with_capacity(records.len());
    for record in records {
        record.validate()?;
        let rows = populations_for_velocities(
            ctx,
            &ops,
            velocities,
            (record.strength, record.omega),
            config,
        )?;
        out.push(rows);
    }
    Ok(out)
}

/// Solves the order-constrained weighted least-squares problem for the
/// selector coefficients. Returns `(c, chi2)`.
pub fn constrained_coefficient_fit(
    populations: &[[f64; 3]],
    t_exp: &[f64],
    errors: &[f64],
) -> Result<([f64; 3], f64), FitError> {
    let m = populations.len();
    if m == 0 {
        return Err(FitError::NoRecords);
    }
    if t_exp.len() != m || errors.len() != m {
        return Err(FitError::MismatchedLengths {
            populations: m,
            data: t_exp.len(),
        });
    }
    if populations.iter().all(|row| row.iter().all(|&p| p == 0.0)) {
        return Err(FitError::DegenerateDesign);
    }
    // Weighted design in the difference parameterization:
    //   c = M u, M = [[1,1,1],[0,1,1],[0,0,1]]  =>  column j of A M is the
    //   partial sum P0 (j=0), P0+P1 (j=1), P0+P1+P2 (j=2).
    let mut a = vec![0.0; m * 3];
    let mut b = vec![0.0; m];
    for (r, row) in populations.iter().enumerate() {
        let w = 1.0 / errors[r];
        a[r * 3] = row[0] * w;
        a[r * 3 + 1] = (row[0] + row[1]) * w;
        a[r * 3 + 2] = (row[0] + row[1] + row[2]) * w;
        b[r] = t_exp[r] * w;
    }
    let (u, chi2) = nnls(&a, m, 3, &b)?;
    let c = [u[0] + u[1] + u[2], u[1] + u[2], u[2]];
    Ok((c, chi2))
}

/// One valid node of the scan surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeFit {
    pub coefficients: [f64; 3],
    pub chi2: f64,
}

/// The chi-square surface over the scan grids.
#[derive(Debug, Clone)]
pub struct ScanSurface {
    pub sigma_grid: Vec<Sigma>,
    pub velocity_grid: Vec<f64>,
    /// `nodes[si][vi]`; `None` marks a failed node.
    pub nodes: Vec<Vec<Option<NodeFit>>>,
    pub n_points: usize,
}

impl ScanSurface {
    /// Assembles a surface from per-node results and validates that at
    /// least one node succeeded.
    pub fn from_nodes(
        sigma_grid: Vec<Sigma>,
        velocity_grid: Vec<f64>,
        nodes: Vec<Vec<Option<NodeFit>>>,
        n_points: usize,
    ) -> Result<Self, FitError> {
        if sigma_grid.is_empty() || velocity_grid.is_empty() {
            return Err(FitError::EmptyGrid);
        }
        let any = nodes.iter().flatten().any(Option::is_some);
        if !any {
            return Err(FitError::AllNodesFailed);
        }
        Ok(ScanSurface {
            sigma_grid,
            velocity_grid,
            nodes,
            n_points,
        })
    }

    /// `chi2(sigma) = min_v chi2(sigma, v)` together with the minimizing
    /// velocity index; `None` where every velocity failed.
    pub fn profile(&self) -> Vec<Option<(f64, usize)>> {
        self.nodes
            .iter()
            .map(|row| {
                let mut best: Option<(f64, usize)> = None;
                for (vi, node) in row.iter().enumerate() {
                    if let Some(fit) = node {
                        if best.is_none_or(|(c, _)| fit.chi2 < c) {
                            best = Some((fit.chi2, vi));
                        }
                    }
                }
                best
            })
            .collect()
    }

    /// Global minimum chi-square over all valid nodes.
    pub fn chi2_min(&self) -> f64 {
        self.nodes
            .iter()
            .flatten()
            .flatten()
            .map(|fit| fit.chi2)
            .fold(f64::INFINITY, f64::min)
    }

    /// The best-fit node.
    pub fn best(&self) -> FitResult {
        let mut best: Option<FitResult> = None;
        for (si, row) in self.nodes.iter().enumerate() {
            for (vi, node) in row.iter().enumerate() {
                if let Some(fit) = node {
                    if best.is_none_or(|b| fit.chi2 < b.chi2) {
                        best = Some(FitResult {
                            sigma: self.sigma_grid[si],
                            velocity: self.velocity_grid[vi],
                            coefficients: fit.coefficients,
                            chi2: fit.chi2,
                            n_points: self.n_points,
                        });
                    }
                }
            }
        }
        best.expect("surface has at least one valid node")
    }

    /// Chi-square of the conservative (`sigma = inf`) column, profiled over
    /// velocity, if that marker is part of the grid.
    pub fn conservative_chi2(&self) -> Option<f64> {
        let si = self.sigma_grid.iter().position(|s| !s.is_finite())?;
        self.profile()[si].map(|(chi2, _)| chi2)
    }
}

/// Evaluates the full scan serially: one population tensor per sigma, then
/// the inner coefficient fit at every `(sigma, velocity)`. Node failures
/// are recorded and skipped.
pub fn scan(
    ctx: &BasisContext,
    records: &[MeasurementRecord],
    sigma_grid: &[Sigma],
    velocity_grid: &[f64],
    config: &ProtocolConfig,
) -> Result<ScanSurface, FitError> {
    if sigma_grid.is_empty() || velocity_grid.is_empty() {
        return Err(FitError::EmptyGrid);
    }
    if records.is_empty() {
        return Err(FitError::NoRecords);
    }
    let t_exp: Vec<f64> = records.iter().map(|r| r.transmission).collect();
    let errors: Vec<f64> = records.iter().map(|r| r.error).collect();
    let mut nodes = Vec::with_capacity(sigma_grid.len());
    for &sigma in sigma_grid {
        match population_tensor(ctx, sigma, velocity_grid, records, config) {
            Ok(tensor) => {
                let mut row = Vec::with_capacity(velocity_grid.len());
                for vi in 0..velocity_grid.len() {
                    let pops: Vec<[f64; 3]> = tensor.iter().map(|per_v| per_v[vi]).collect();
                    row.push(match constrained_coefficient_fit(&pops, &t_exp, &errors) {
                        Ok((coefficients, chi2)) => Some(NodeFit { coefficients, chi2 }),
                        Err(_) => None,
                    });
                }
                nodes.push(row);
            }
            Err(_) => nodes.push(vec![None; velocity_grid.len()]),
        }
    }
    ScanSurface::from_nodes(
        sigma_grid.to_vec(),
        velocity_grid.to_vec(),
        nodes,
        records.len(),
    )
}

/// Default scan grids: 25 log-spaced sigmas in `[1e2, 1e3]` plus the
/// conservative marker, and 40 linear velocities across the measured window.
pub fn default_grids(config: &ProtocolConfig) -> (Vec<Sigma>, Vec<f64>) {
    let mut sigmas: Vec<Sigma> = log_spaced(1e2, 1e3, 25)
        .into_iter()
        .map(Sigma::Finite)
        .collect();
    sigmas.push(Sigma::Infinite);
    let (lo, hi) = config.velocity_bounds;
    let velocities = lin_spaced(lo, hi, 40);
    (sigmas, velocities)
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn lin_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Confidence region in sigma from the profiled surface.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion {
    pub level: f64,
    pub delta: f64,
    pub chi2_min: f64,
    /// Finite sigma grid values inside the region, ascending.
    pub members: Vec<f64>,
    /// Smallest finite grid sigma inside the region.
    pub sigma_lower_bound: Option<f64>,
}

/// Region `{sigma : chi2(sigma) <= chi2_min + delta(level)}` using the
/// one-parameter profile-likelihood threshold.
pub fn confidence_region(surface: &ScanSurface, level: f64) -> Result<ConfidenceRegion, FitError> {
    confidence_region_with_delta(surface, level, chi2_quantile_1df(level)?)
}

/// As [`confidence_region`] with an explicit threshold, for callers that
/// prefer a different delta-chi-square rule.
pub fn confidence_region_with_delta(
    surface: &ScanSurface,
    level: f64,
    delta: f64,
) -> Result<ConfidenceRegion, FitError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(FitError::BadLevel(level));
    }
    let chi2_min = surface.chi2_min();
    let profile = surface.profile();
    let mut members = Vec::new();
    for (si, sigma) in surface.sigma_grid.iter().enumerate() {
        if let (Sigma::Finite(s), Some((chi2, _))) = (sigma, profile[si]) {
            if chi2 <= chi2_min + delta {
                members.push(*s);
            }
        }
    }
    members.sort_by(f64::total_cmp);
    let sigma_lower_bound = members.first().copied();
    Ok(ConfidenceRegion {
        level,
        delta,
        chi2_min,
        members,
        sigma_lower_bound,
    })
}

/// The smallest finite sigma whose profiled chi-square matches the
/// conservative model's within [`PARITY_SLACK`]; `None` when the grid has no
/// conservative column or no sigma qualifies.
pub fn parity_bound(surface: &ScanSurface) -> Option<f64> {
    let reference = surface.conservative_chi2()?;
    let profile = surface.profile();
    let mut candidates: Vec<f64> = Vec::new();
    for (si, sigma) in surface.sigma_grid.iter().enumerate() {
        if let (Sigma::Finite(s), Some((chi2, _))) = (sigma, profile[si]) {
            if chi2 <= reference * (1.0 + PARITY_SLACK) {
                candidates.push(*s);
            }
        }
    }
    candidates
        .into_iter()
        .fold(None, |acc, s| Some(acc.map_or(s, |a: f64| a.min(s))))
}

/// `delta chi^2` for one interesting parameter at the given confidence
/// level: the square of the standard normal quantile at `(1 + level) / 2`.
/// At 0.90 this is the textbook 2.706.
pub fn chi2_quantile_1df(level: f64) -> Result<f64, FitError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(FitError::BadLevel(level));
    }
    let z = normal_quantile(0.5 * (1.0 + level));
    Ok(z * z)
}

/// Acklam's rational approximation of the standard normal quantile,
/// polished by one Halley step; accurate to ~1e-15 over (0, 1).
fn normal_quantile(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // One Halley refinement against the normal CDF via erfc.
    let e = 0.5 * erfc(-x / core::f64::consts::SQRT_2) - p;
    let u = e * (core::f64::consts::TAU).sqrt() * (x * x / 2.0).exp();
    x - u / (1.0 + x * u / 2.0)
}

/// Complementary error function (Numerical Recipes rational Chebyshev fit,
/// relative error below 1.2e-7, more than enough after the Halley polish).
fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}
