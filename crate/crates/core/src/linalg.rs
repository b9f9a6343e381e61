//! Minimal dense complex matrices sized for truncated-basis work.
//!
//! Basis sizes here are tens of states, so a flat row-major `Vec` with
//! straightforward loops beats pulling in a full linear-algebra stack,
//! and keeps the crate `no_std`. The only decomposition needed anywhere
//! is symmetric/Hermitian eigenvalues for diagnostics, provided by a
//! cyclic Jacobi sweep.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};
// Float supplies the no_std math methods; when std ends up linked
// elsewhere in the build graph its inherent methods shadow the trait,
// so the import sits unused in those configurations.
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// `out = self * rhs`; the cache-friendly i-k-j ordering keeps the hot
    /// propagation loops vectorizable.
    pub fn mul_into(&self, rhs: &CMatrix, out: &mut CMatrix) {
        let n = self.n;
        debug_assert_eq!(rhs.n, n);
        debug_assert_eq!(out.n, n);
        out.data
            .iter_mut()
            .for_each(|z| *z = Complex64::new(0.0, 0.0));
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let row_b = &rhs.data[k * n..(k + 1) * n];
                let row_c = &mut out.data[i * n..(i + 1) * n];
                for (c, &b) in row_c.iter_mut().zip(row_b) {
                    *c += a * b;
                }
            }
        }
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.n);
        self.mul_into(rhs, &mut out);
        out
    }

    pub fn adjoint(&self) -> CMatrix {
        let n = self.n;
        CMatrix::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    /// `self += scale * other`.
    pub fn axpy(&mut self, scale: Complex64, other: &CMatrix) {
        debug_assert_eq!(self.n, other.n);
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: Complex64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude of `self - self^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Replaces `self` by `(self + self^dagger) / 2`.
    pub fn hermitize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in i..n {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// `max_ij |a_ij - b_ij|`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigenvalues of a real symmetric matrix (row-major, length `n * n`) by
/// cyclic Jacobi rotations, sorted ascending.
pub fn symmetric_eigenvalues(matrix: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_unstable_by(f64::total_cmp);
    eig
}

/// Eigenvalues of a Hermitian complex matrix, sorted ascending.
///
/// Uses the real embedding `[[Re, -Im], [Im, Re]]`, whose spectrum is the
/// Hermitian spectrum with every eigenvalue doubled.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.dim();
    let big = 2 * n;
    let mut real = vec![0.0f64; big * big];
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            real[i * big + j] = z.re;
            real[(i + n) * big + (j + n)] = z.re;
            real[i * big + (j + n)] = -z.im;
            real[(i + n) * big + j] = z.im;
        }
    }
    let doubled = symmetric_eigenvalues(&real, big);
    doubled.into_iter().step_by(2).collect()
}
