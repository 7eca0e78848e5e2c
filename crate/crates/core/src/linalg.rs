//! Fixed-size 8x8 real matrices and a small symmetric eigensolver.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Index, IndexMut, Mul};
#[allow(unused_imports)] // float methods come from std when it is linked
use num_traits::Float;
use serde::{Deserialize, Serialize};

pub const DIM: usize = 8;

/// Dense 8x8 real matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Matrix8(pub [[f64; DIM]; DIM]);

impl Default for Matrix8 {
    fn default() -> Self {
        Self::zeros()
    }
}

impl Matrix8 {
    pub const fn zeros() -> Self {
        Matrix8([[0.0; DIM]; DIM])
    }

    pub fn identity() -> Self {
        Self::scaled_identity(1.0)
    }

    pub fn scaled_identity(s: f64) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = s;
        }
        m
    }

    pub fn from_diagonal(d: &[f64; DIM]) -> Self {
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i][i] = d[i];
        }
        m
    }

    pub fn diagonal(&self) -> [f64; DIM] {
        core::array::from_fn(|i| self.0[i][i])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros();
        for i in 0..DIM {
            for j in 0..DIM {
                t.0[j][i] = self.0[i][j];
            }
        }
        t
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|x| *x *= s);
        m
    }

    pub fn trace(&self) -> f64 {
        (0..DIM).map(|i| self.0[i][i]).sum()
    }

    /// `R * self * R^T`.
    pub fn congruence(&self, r: &Matrix8) -> Matrix8 {
        *r * *self * r.transpose()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in (i + 1)..DIM {
                worst = worst.max((self.0[i][j] - self.0[j][i]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn is_symmetric(&self) -> bool {
        self.max_asymmetry() == 0.0
    }

    /// Upper triangle (including the diagonal), row by row: 36 entries.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(DIM * (DIM + 1) / 2);
        for i in 0..DIM {
            for j in i..DIM {
                out.push(self.0[i][j]);
            }
        }
        out
    }

    pub fn to_flat(&self) -> [f64; DIM * DIM] {
        core::array::from_fn(|k| self.0[k / DIM][k % DIM])
    }

    pub fn from_flat(flat: &[f64]) -> Matrix8 {
        assert_eq!(flat.len(), DIM * DIM);
        let mut m = Self::zeros();
        for i in 0..DIM {
            m.0[i].copy_from_slice(&flat[i * DIM..(i + 1) * DIM]);
        }
        m
    }

    /// Eigenvalues of a symmetric matrix in ascending order.
    pub fn symmetric_eigenvalues(&self) -> [f64; DIM] {
        let flat = self.to_flat().to_vec();
        let ev = symmetric_eigenvalues(flat, DIM);
        core::array::from_fn(|i| ev[i])
    }
}

impl Index<(usize, usize)> for Matrix8 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Matrix8 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Mul for Matrix8 {
    type Output = Matrix8;
    fn mul(self, rhs: Matrix8) -> Matrix8 {
        let mut out = Matrix8::zeros();
        for i in 0..DIM {
            for k in 0..DIM {
                let a = self.0[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..DIM {
                    out.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        out
    }
}

impl Add for Matrix8 {
    type Output = Matrix8;
    fn add(self, rhs: Matrix8) -> Matrix8 {
        let mut out = self;
        for i in 0..DIM {
            for j in 0..DIM {
                out.0[i][j] += rhs.0[i][j];
            }
        }
        out
    }
}

/// Symplectic form pairing each (coordinate, momentum) quadrature pair:
/// block diagonal with `[[0, 1], [-1, 0]]` blocks.
pub fn symplectic_form() -> Matrix8 {
    let mut omega = Matrix8::zeros();
    for k in 0..DIM / 2 {
        omega.0[2 * k][2 * k + 1] = 1.0;
        omega.0[2 * k + 1][2 * k] = -1.0;
    }
    omega
}

/// Smallest eigenvalue of the Hermitian matrix `C + (i/2) Omega`.
///
/// A covariance matrix is physical (satisfies the uncertainty relation) iff
/// this is non-negative. The Hermitian matrix `X + iY` is embedded as the
/// real symmetric `[[X, -Y], [Y, X]]`, whose spectrum is that of `X + iY`
/// with every eigenvalue doubled.
pub fn uncertainty_min_eigenvalue(c: &Matrix8) -> f64 {
    let y = symplectic_form().scale(0.5);
    let n = 2 * DIM;
    let mut m = vec![0.0; n * n];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i * n + j] = c.0[i][j];
            m[(i + DIM) * n + (j + DIM)] = c.0[i][j];
            m[i * n + (j + DIM)] = -y.0[i][j];
            m[(i + DIM) * n + j] = y.0[i][j];
        }
    }
    symmetric_eigenvalues(m, n)[0]
}

/// Cyclic Jacobi eigenvalue iteration for a dense symmetric `n x n` matrix
/// stored row-major. Returns eigenvalues in ascending order.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= 1e-15 * scale * 1e-3 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}
