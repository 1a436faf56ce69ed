//! Dense symmetric positive-definite linear algebra on row-major buffers.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// First jitter tried after a plain factorization fails.
pub const JITTER_START: f64 = 1e-10;
/// Largest diagonal jitter before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Dot product with independent partial sums so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0_f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Lower Cholesky factor `L` of `A = L Lᵀ`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    jitter: f64,
}

impl Cholesky {
    /// Factor `a` (only the lower triangle is read). `None` if not positive definite.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        Self::factor_shifted(a, n, 0.0)
    }

    fn factor_shifted(a: &[f64], n: usize, shift: f64) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (ri, rj) = (i * n, j * n);
                let s = a[ri + j] - dot(&l[ri..ri + j], &l[rj..rj + j]);
                if i == j {
                    let d = s + shift;
                    if !(d > 0.0) || !d.is_finite() {
                        return None;
                    }
                    l[ri + i] = libm::sqrt(d);
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Some(Self { n, l, jitter: shift })
    }

    /// Factor, escalating a diagonal jitter by ×10 from [`JITTER_START`] up
    /// to [`JITTER_MAX`] on failure.
    pub fn factor_with_jitter(a: &[f64], n: usize) -> Result<Self> {
        if let Some(c) = Self::factor(a, n) {
            return Ok(c);
        }
        let mut jitter = JITTER_START;
        while jitter <= JITTER_MAX * (1.0 + 1e-9) {
            if let Some(c) = Self::factor_shifted(a, n, jitter) {
                return Ok(c);
            }
            jitter *= 10.0;
        }
        Err(Error::NotPositiveDefinite { jitter: JITTER_MAX })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Diagonal jitter that was needed, zero if none.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.l[i * self.n..i * self.n + i + 1]
    }

    /// In place `b ← L⁻¹ b`.
    pub fn solve_lower(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.l[i * n + i];
        }
    }

    /// In place `b ← L⁻ᵀ b`.
    pub fn solve_upper(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let xi = b[i] / self.l[i * n + i];
            b[i] = xi;
            let row = &self.l[i * n..i * n + i];
            for (bj, lij) in b[..i].iter_mut().zip(row) {
                *bj -= lij * xi;
            }
        }
    }

    /// `A⁻¹ b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_lower(&mut x);
        self.solve_upper(&mut x);
        x
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| libm::log(self.l[i * self.n + i])).sum::<f64>()
    }

    /// Full symmetric `A⁻¹`, row-major.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.n;
        // Row j of `z` holds column j of L⁻¹, non-zero from index j on.
        let mut z = vec![0.0; n * n];
        for j in 0..n {
            let zj = &mut z[j * n..(j + 1) * n];
            zj[j] = 1.0 / self.l[j * n + j];
            for k in j + 1..n {
                let lk = &self.l[k * n..k * n + k];
                zj[k] = -dot(&lk[j..k], &zj[j..k]) / self.l[k * n + k];
            }
        }
        let mut inv = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(&z[i * n + j..(i + 1) * n], &z[j * n + j..(j + 1) * n]);
                inv[i * n + j] = v;
                inv[j * n + i] = v;
            }
        }
        inv
    }
}
