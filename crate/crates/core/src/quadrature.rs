//! Panel-wise Gauss-Legendre quadrature for the semi-infinite Airy overlap
//! integrals.
//!
//! All operator matrix elements reduce to integrals of the form
//! `int_0^inf f(xi) Ai(xi + a_j) g(xi + a_k) dxi` with `f` one of
//! `{1, xi, exp(-i xi / sigma)}` and `g` either `Ai` or `Ai'`. The Airy
//! tails decay super-exponentially, so the integrals are truncated at a
//! cutoff `xi_max` chosen so that both shifted tails are below 1e-15, and
//! evaluated with fixed Gauss-Legendre panels. The only oscillation comes
//! from the `exp(-i xi / sigma)` phase; panels are narrowed when `sigma`
//! is small so each panel sees at most ~2 radians of phase.

use alloc::vec::Vec;
use core::fmt;
use num_complex::Complex64;
// Float supplies the no_std math methods; when std ends up linked
// elsewhere in the build graph its inherent methods shadow the trait,
// so the import sits unused in those configurations.
#[allow(unused_imports)]
use num_traits::Float;

use crate::airy::{self, AiryZeroTable};

/// Tail magnitude above which a cutoff is considered too small.
pub const TAIL_TOLERANCE: f64 = 1e-15;

const DEFAULT_XI_MAX: f64 = 40.0;
const DEFAULT_PANEL_WIDTH: f64 = 2.0;
const NODES_PER_PANEL: usize = 32;

/// Errors from quadrature construction and overlap evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum QuadratureError {
    /// Cutoff or panel count not positive.
    InvalidScheme,
    /// State index at or beyond the zero-table size.
    IndexOutOfRange { index: usize, count: usize },
    /// `exp_phase` weight needs a positive sigma.
    NonPositiveSigma(f64),
    /// The integrand tail has not decayed at the cutoff for the given
    /// eigenstate shift.
    TailNotDecayed {
        xi_max: f64,
        shift: f64,
        magnitude: f64,
    },
}

impl fmt::Display for QuadratureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureError::InvalidScheme => write!(f, "quadrature cutoff and panel count must be positive"),
            QuadratureError::IndexOutOfRange { index, count } => {
                write!(f, "state index {index} outside zero table of size {count}")
            }
            QuadratureError::NonPositiveSigma(s) => write!(f, "exp-phase weight needs sigma > 0, got {s}"),
            QuadratureError::TailNotDecayed { xi_max, shift, magnitude } => write!(
                f,
                "cutoff xi_max = {xi_max} too small: |Ai({xi_max} + {shift})| = {magnitude:.3e} > {TAIL_TOLERANCE:.0e}"
            ),
        }
    }
}

impl core::error::Error for QuadratureError {}

/// Fixed node/weight table on `[0, xi_max]`, assembled from equal
/// Gauss-Legendre panels.
#[derive(Debug, Clone)]
pub struct QuadratureScheme {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    xi_max: f64,
    panel_count: usize,
}

impl QuadratureScheme {
    /// Builds `panel_count` equal panels of `NODES_PER_PANEL`-point
    /// Gauss-Legendre quadrature on `[0, xi_max]`.
    pub fn new(xi_max: f64, panel_count: usize) -> Result<Self, QuadratureError> {
        if !(xi_max > 0.0) || panel_count == 0 {
            return Err(QuadratureError::InvalidScheme);
        }
        let (ref_nodes, ref_weights) = legendre_rule(NODES_PER_PANEL);
        let width = xi_max / panel_count as f64;
        let mut nodes = Vec::with_capacity(panel_count * NODES_PER_PANEL);
        let mut weights = Vec::with_capacity(panel_count * NODES_PER_PANEL);
        for p in 0..panel_count {
            let lo = p as f64 * width;
            for (&t, &w) in ref_nodes.iter().zip(&ref_weights) {
                nodes.push(lo + 0.5 * width * (t + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Ok(QuadratureScheme {
            nodes,
            weights,
            xi_max,
            panel_count,
        })
    }

    /// Default scheme for a basis: the cutoff covers the deepest zero plus
    /// enough room for the tail to fall below [`TAIL_TOLERANCE`], never less
    /// than 40, with ~2-wide panels.
    pub fn for_basis(zeros: &AiryZeroTable) -> Self {
        let deepest = zeros.zero(zeros.count() - 1).abs();
        let xi_max = DEFAULT_XI_MAX.max(deepest + 16.0);
        let panels = (xi_max / DEFAULT_PANEL_WIDTH).ceil() as usize;
        Self::new(xi_max, panels).expect("default scheme is valid")
    }

    /// As [`Self::for_basis`] but with panels narrowed so the oscillatory
    /// `exp(-i xi / sigma)` weight sees at most ~2 radians per panel.
    pub fn for_basis_with_phase(zeros: &AiryZeroTable, sigma: f64) -> Self {
        let deepest = zeros.zero(zeros.count() - 1).abs();
        let xi_max = DEFAULT_XI_MAX.max(deepest + 16.0);
        let width = DEFAULT_PANEL_WIDTH.min(2.0 * sigma);
        let panels = (xi_max / width).ceil() as usize;
        Self::new(xi_max, panels).expect("default scheme is valid")
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn panel_count(&self) -> usize {
        self.panel_count
    }

    /// Node/weight pairs in ascending node order.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates a scalar function over `[0, xi_max]`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.points().map(|(x, w)| w * f(x)).sum()
    }
}

/// The `f(xi)` weight selector of an overlap integral, together with the
/// choice of `g = Ai` vs `g = Ai'` on the second factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapWeight {
    /// `f = 1`, `g = Ai`.
    One,
    /// `f = xi`, `g = Ai`.
    Xi,
    /// `f = exp(-i xi / sigma)`, `g = Ai`.
    ExpPhase { sigma: f64 },
    /// `f = 1`, `g = Ai'`.
    AiDerivative,
}

/// `int_0^{xi_max} f(xi) Ai(xi + a_{j+1}) g(xi + a_{k+1}) dxi`.
///
/// Real weights return a value with exactly zero imaginary part. A scheme
/// whose cutoff leaves either shifted Airy tail above [`TAIL_TOLERANCE`]
/// is rejected.
pub fn airy_overlap(
    j: usize,
    k: usize,
    weight: OverlapWeight,
    zeros: &AiryZeroTable,
    scheme: &QuadratureScheme,
) -> Result<Complex64, QuadratureError> {
    let count = zeros.count();
    if j >= count {
        return Err(QuadratureError::IndexOutOfRange { index: j, count });
    }
    if k >= count {
        return Err(QuadratureError::IndexOutOfRange { index: k, count });
    }
    if let OverlapWeight::ExpPhase { sigma } = weight {
        if !(sigma > 0.0) {
            return Err(QuadratureError::NonPositiveSigma(sigma));
        }
    }
    let a_j = zeros.zero(j);
    let a_k = zeros.zero(k);
    check_tail(scheme.xi_max, a_j)?;
    check_tail(scheme.xi_max, a_k)?;

    match weight {
        OverlapWeight::One => {
            let v = scheme.integrate(|xi| airy::ai_pair(xi + a_j).0 * airy::ai_pair(xi + a_k).0);
            Ok(Complex64::new(v, 0.0))
        }
        OverlapWeight::Xi => {
            let v =
                scheme.integrate(|xi| xi * airy::ai_pair(xi + a_j).0 * airy::ai_pair(xi + a_k).0);
            Ok(Complex64::new(v, 0.0))
        }
        OverlapWeight::AiDerivative => {
            let v = scheme.integrate(|xi| airy::ai_pair(xi + a_j).0 * airy::ai_pair(xi + a_k).1);
            Ok(Complex64::new(v, 0.0))
        }
        OverlapWeight::ExpPhase { sigma } => {
            let mut acc = Complex64::new(0.0, 0.0);
            for (xi, w) in scheme.points() {
                let product = airy::ai_pair(xi + a_j).0 * airy::ai_pair(xi + a_k).0;
                let phase = xi / sigma;
                acc += Complex64::new(phase.cos(), -phase.sin()) * (w * product);
            }
            Ok(acc)
        }
    }
}

fn check_tail(xi_max: f64, shift: f64) -> Result<(), QuadratureError> {
    let magnitude = airy::ai_pair(xi_max + shift).0.abs();
    if magnitude > TAIL_TOLERANCE {
        Err(QuadratureError::TailNotDecayed {
            xi_max,
            shift,
            magnitude,
        })
    } else {
        Ok(())
    }
}

/// Tabulated `Ai` and `Ai'` values at every quadrature node for every basis
/// shift; the operator builder turns each matrix element into a weighted dot
/// product over these rows instead of re-evaluating Airy functions per
/// element.
pub(crate) struct AiryNodeTable {
    /// `ai[j][q] = Ai(node_q + a_{j+1})`
    pub ai: Vec<Vec<f64>>,
    /// `aip[j][q] = Ai'(node_q + a_{j+1})`
    pub aip: Vec<Vec<f64>>,
}

impl AiryNodeTable {
    pub fn build(zeros: &AiryZeroTable, scheme: &QuadratureScheme) -> Self {
        let n = zeros.count();
        let mut ai = Vec::with_capacity(n);
        let mut aip = Vec::with_capacity(n);
        for j in 0..n {
            let shift = zeros.zero(j);
            let mut row_ai = Vec::with_capacity(scheme.nodes().len());
            let mut row_aip = Vec::with_capacity(scheme.nodes().len());
            for &x in scheme.nodes() {
                let (v, d) = airy::ai_pair(x + shift);
                row_ai.push(v);
                row_aip.push(d);
            }
            ai.push(row_ai);
            aip.push(row_aip);
        }
        AiryNodeTable { ai, aip }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-like initial guess.
        let mut x = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_eval(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(-x);
        weights.push(w);
    }
    // Mirror to fill the positive half, sharing weights.
    for i in (0..n - m).rev() {
        let x = -nodes[i];
        let w = weights[i];
        nodes.push(x);
        weights.push(w);
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 2..=n {
        let kf = k as f64;
        let p_next = ((2.0 * kf - 1.0) * x * p - (kf - 1.0) * p_prev) / kf;
        p_prev = p;
        p = p_next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airy::airy_zeros;

    #[test]
    fn integrates_constants_exactly() {
        let scheme = QuadratureScheme::new(40.0, 20).unwrap();
        let one = scheme.integrate(|_| 1.0);
        assert!((one / 40.0 - 1.0).abs() < 1e-12);
        // Weights positive, nodes strictly inside.
        for (x, w) in scheme.points() {
            assert!(w > 0.0);
            assert!(x > 0.0 && x < 40.0);
        }
        assert_eq!(scheme.panel_count(), 20);
    }

    #[test]
    fn gauss_panels_integrate_smooth_functions() {
        let scheme = QuadratureScheme::new(10.0, 5).unwrap();
        let v = scheme.integrate(|x| x * x);
        assert!((v - 1000.0 / 3.0).abs() < 1e-9);
        let v = scheme.integrate(|x| (-x).exp());
        assert!((v - (1.0 - (-10.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn norm_overlap_matches_derivative_identity() {
        // int_0^inf Ai^2(xi + a) dxi = Ai'(a)^2 - a Ai(a)^2; at a zero the
        // second term vanishes.
        let zeros = airy_zeros(3).unwrap();
        let scheme = QuadratureScheme::for_basis(&zeros);
        let v = airy_overlap(0, 0, OverlapWeight::One, &zeros, &scheme).unwrap();
        let expected = crate::airy::airy_ai_prime(zeros.zero(0)).unwrap().powi(2);
        assert!(
            (v.re - expected).abs() < 1e-12,
            "got {}, want {expected}",
            v.re
        );
        assert_eq!(v.im, 0.0);
    }

    #[test]
    fn distinct_states_are_orthogonal() {
        let zeros = airy_zeros(3).unwrap();
        let scheme = QuadratureScheme::for_basis(&zeros);
        let v = airy_overlap(0, 1, OverlapWeight::One, &zeros, &scheme).unwrap();
        assert!(v.re.abs() < 1e-9);
    }

    #[test]
    fn ai_times_own_derivative_integrates_to_zero() {
        // int Ai Ai' = [Ai^2 / 2] and Ai vanishes at both ends.
        let zeros = airy_zeros(3).unwrap();
        let scheme = QuadratureScheme::for_basis(&zeros);
        let v = airy_overlap(0, 0, OverlapWeight::AiDerivative, &zeros, &scheme).unwrap();
        assert!(v.re.abs() < 1e-9);
    }

    #[test]
    fn doubling_panels_is_converged() {
        let zeros = airy_zeros(5).unwrap();
        let coarse = QuadratureScheme::new(44.0, 22).unwrap();
        let fine = QuadratureScheme::new(44.0, 44).unwrap();
        for weight in [
            OverlapWeight::One,
            OverlapWeight::Xi,
            OverlapWeight::AiDerivative,
            OverlapWeight::ExpPhase { sigma: 100.0 },
        ] {
            for (j, k) in [(0, 0), (0, 1), (2, 4), (4, 4)] {
                let a = airy_overlap(j, k, weight, &zeros, &coarse).unwrap();
                let b = airy_overlap(j, k, weight, &zeros, &fine).unwrap();
                assert!(
                    (a - b).norm() < 1e-10,
                    "panel doubling moved ({j},{k}) {weight:?} by {:.2e}",
                    (a - b).norm()
                );
            }
        }
    }

    #[test]
    fn rejects_undersized_cutoff() {
        let zeros = airy_zeros(20).unwrap();
        // The 20th zero sits near -20.6, so a cutoff of 25 leaves the tail
        // at Ai(~4.4) which is nowhere near decayed.
        let scheme = QuadratureScheme::new(25.0, 13).unwrap();
        let r = airy_overlap(19, 19, OverlapWeight::One, &zeros, &scheme);
        assert!(matches!(r, Err(QuadratureError::TailNotDecayed { .. })));
    }

    #[test]
    fn rejects_bad_indices_and_sigma() {
        let zeros = airy_zeros(2).unwrap();
        let scheme = QuadratureScheme::for_basis(&zeros);
        assert!(matches!(
            airy_overlap(2, 0, OverlapWeight::One, &zeros, &scheme),
            Err(QuadratureError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            airy_overlap(
                0,
                0,
                OverlapWeight::ExpPhase { sigma: 0.0 },
                &zeros,
                &scheme
            ),
            Err(QuadratureError::NonPositiveSigma(_))
        ));
        assert!(QuadratureScheme::new(0.0, 4).is_err());
        assert!(QuadratureScheme::new(40.0, 0).is_err());
    }
}
