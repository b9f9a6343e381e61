//! Non-negative least squares by the classic active-set method.
//!
//! Minimizes `||A x - b||^2` subject to `x >= 0`. The passive-set least
//! squares subproblems are solved with Householder QR, which stays well
//! behaved when columns are nearly collinear (common here: populations
//! barely move for weak drives). Problem sizes in this crate are a handful
//! of columns, so no attempt is made at large-scale efficiency.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
// Float supplies the no_std math methods; when std ends up linked
// elsewhere in the build graph its inherent methods shadow the trait,
// so the import sits unused in those configurations.
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub enum NnlsError {
    EmptyProblem,
    /// The iteration cap was hit; with a correct active-set update this
    /// indicates numerically hostile input.
    DidNotConverge,
}

impl fmt::Display for NnlsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnlsError::EmptyProblem => write!(f, "empty least-squares problem"),
            NnlsError::DidNotConverge => write!(f, "active-set iteration did not converge"),
        }
    }
}

impl core::error::Error for NnlsError {}

/// Solves `min ||A x - b||^2` with `x >= 0`; `a` is row-major
/// `rows x cols`. Returns the solution and the squared residual.
pub fn nnls(a: &[f64], rows: usize, cols: usize, b: &[f64]) -> Result<(Vec<f64>, f64), NnlsError> {
    if rows == 0 || cols == 0 || a.len() != rows * cols || b.len() != rows {
        return Err(NnlsError::EmptyProblem);
    }
    let mut x = vec![0.0; cols];
    let mut passive = vec![false; cols];

    // Dual tolerance scaled to the gradient magnitude of the raw problem.
    let grad0 = gradient(a, rows, cols, b, &x);
    let scale = grad0.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1.0);
    let tol = 1e-12 * scale;

    let max_outer = 6 * cols + 6;
    for _ in 0..max_outer {
        let w = gradient(a, rows, cols, b, &x);
        // Most positive dual among the active (clamped) variables.
        let mut best: Option<(usize, f64)> = None;
        for j in 0..cols {
            if !passive[j] && w[j] > tol && best.is_none_or(|(_, bw)| w[j] > bw) {
                best = Some((j, w[j]));
            }
        }
        let Some((enter, _)) = best else {
            break; // KKT satisfied
        };
        passive[enter] = true;

        // Inner loop: restore feasibility of the passive-set LS solution.
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > 4 * cols + 4 {
                return Err(NnlsError::DidNotConverge);
            }
            let z = passive_least_squares(a, rows, cols, b, &passive);
            let feasible = passive.iter().enumerate().all(|(j, &p)| !p || z[j] > 0.0);
            if feasible {
                for j in 0..cols {
                    x[j] = if passive[j] { z[j] } else { 0.0 };
                }
                break;
            }
            // Step as far toward z as feasibility allows; the blocking
            // variable lands exactly on zero and leaves the passive set.
            let mut alpha = 1.0f64;
            let mut blocking = None;
            for j in 0..cols {
                if passive[j] && z[j] <= 0.0 {
                    let denom = x[j] - z[j];
                    if denom > 0.0 {
                        let t = x[j] / denom;
                        if t < alpha {
                            alpha = t;
                            blocking = Some(j);
                        }
                    } else {
                        alpha = 0.0;
                        blocking = Some(j);
                    }
                }
            }
            for j in 0..cols {
                if passive[j] {
                    x[j] = (x[j] + alpha * (z[j] - x[j])).max(0.0);
                }
            }
            if let Some(j) = blocking {
                x[j] = 0.0;
                passive[j] = false;
            }
            // Roundoff can strand other passive variables at zero; retire
            // them too so the LS subproblem stays well posed.
            for j in 0..cols {
                if passive[j] && x[j] == 0.0 && z[j] <= 0.0 {
                    passive[j] = false;
                }
            }
        }
    }

    let mut residual_sq = 0.0;
    for r in 0..rows {
        let mut acc = -b[r];
        for j in 0..cols {
            acc += a[r * cols + j] * x[j];
        }
        residual_sq += acc * acc;
    }
    Ok((x, residual_sq))
}

/// `A^T (b - A x)`.
fn gradient(a: &[f64], rows: usize, cols: usize, b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut resid = vec![0.0; rows];
    for r in 0..rows {
        let mut acc = b[r];
        for j in 0..cols {
            acc -= a[r * cols + j] * x[j];
        }
        resid[r] = acc;
    }
    let mut g = vec![0.0; cols];
    for j in 0..cols {
        g[j] = (0..rows).map(|r| a[r * cols + j] * resid[r]).sum();
    }
    g
}

/// Unconstrained least squares over the passive columns via Householder QR;
/// non-passive entries of the result are zero.
fn passive_least_squares(
    a: &[f64],
    rows: usize,
    cols: usize,
    b: &[f64],
    passive: &[bool],
) -> Vec<f64> {
    let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
    let p = idx.len();
    let mut z = vec![0.0; cols];
    if p == 0 {
        return z;
    }
    // Dense copy of the passive submatrix and rhs.
    let mut m = vec![0.0; rows * p];
    for r in 0..rows {
        for (cj, &j) in idx.iter().enumerate() {
            m[r * p + cj] = a[r * cols + j];
        }
    }
    let mut rhs = b.to_vec();

    let steps = p.min(rows);
    for k in 0..steps {
        // Householder vector for column k below row k.
        let mut norm_sq = 0.0;
        for r in k..rows {
            norm_sq += m[r * p + k] * m[r * p + k];
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue; // dependent column; its coefficient stays zero
        }
        let alpha = if m[k * p + k] > 0.0 { -norm } else { norm };
        let mut v = vec![0.0; rows - k];
        v[0] = m[k * p + k] - alpha;
        for r in k + 1..rows {
            v[r - k] = m[r * p + k];
        }
        let v_norm_sq: f64 = v.iter().map(|t| t * t).sum();
        m[k * p + k] = alpha;
        for r in k + 1..rows {
            m[r * p + k] = 0.0;
        }
        if v_norm_sq == 0.0 {
            continue;
        }
        for c in k + 1..p {
            let mut dot = 0.0;
            for r in k..rows {
                dot += v[r - k] * m[r * p + c];
            }
            let f = 2.0 * dot / v_norm_sq;
            for r in k..rows {
                m[r * p + c] -= f * v[r - k];
            }
        }
        let mut dot = 0.0;
        for r in k..rows {
            dot += v[r - k] * rhs[r];
        }
        let f = 2.0 * dot / v_norm_sq;
        for r in k..rows {
            rhs[r] -= f * v[r - k];
        }
    }

    // Back substitution on the upper-triangular factor.
    let mut sol = vec![0.0; p];
    for c in (0..steps).rev() {
        let mut acc = rhs[c];
        for c2 in c + 1..p {
            acc -= m[c * p + c2] * sol[c2];
        }
        let diag = m[c * p + c];
        sol[c] = if diag.abs() > 1e-300 { acc / diag } else { 0.0 };
    }
    for (cj, &j) in idx.iter().enumerate() {
        z[j] = sol[cj];
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_interior_solution() {
        // A = I, b = (1, 2): solution is b itself.
        let (x, r) = nnls(&[1.0, 0.0, 0.0, 1.0], 2, 2, &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
        assert!(r < 1e-24);
    }

    #[test]
    fn clamps_negative_component() {
        // A = I, b = (-1, 2): x = (0, 2), residual 1.
        let (x, r) = nnls(&[1.0, 0.0, 0.0, 1.0], 2, 2, &[-1.0, 2.0]).unwrap();
        assert_eq!(x[0], 0.0);
        assert!((x[1] - 2.0).abs() < 1e-12);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let a = [1.0, 0.3, 0.2, 0.9, 0.5, 0.1];
        let (x, r) = nnls(&a, 2, 3, &[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 0.0]);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn known_lawson_hanson_example() {
        // Overdetermined 4x2 with interior optimum; cross-checked against a
        // dense normal-equations solve.
        let a = [1.0, 1.0, 2.0, 1.0, 3.0, 1.0, 4.0, 1.0];
        let b = [2.1, 3.9, 6.2, 7.8];
        let (x, _) = nnls(&a, 4, 2, &b).unwrap();
        // Normal equations: [30 10; 10 4] x = [59.7, 20.0]
        let det = 30.0 * 4.0 - 100.0;
        let x0 = (4.0 * 59.7 - 10.0 * 20.0) / det;
        let x1 = (30.0 * 20.0 - 10.0 * 59.7) / det;
        assert!((x[0] - x0).abs() < 1e-10);
        assert!((x[1] - x1).abs() < 1e-10);
    }

    #[test]
    fn handles_dependent_columns() {
        // Two identical columns: any split is optimal; the solver must not
        // blow up and must reach the optimal residual.
        let a = [1.0, 1.0, 1.0, 1.0];
        let b = [2.0, 2.0];
        let (x, r) = nnls(&a, 2, 2, &b).unwrap();
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((x[0] + x[1] - 2.0).abs() < 1e-10);
        assert!(r < 1e-20);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(nnls(&[], 0, 0, &[]).is_err());
        assert!(nnls(&[1.0], 1, 2, &[1.0]).is_err());
    }
}
