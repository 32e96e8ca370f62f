//! Banded Cholesky factorization and 3x3 dense helpers.
//!
//! The lattice precision matrices have half-bandwidth `2 * cols` in
//! row-major order, so a banded factor costs `O(n * bw^2)` instead of the
//! dense `O(n^3)`.

use crate::error::{Error, Result};

/// Lower-triangular banded Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    // Row i stores L[i][i - bw ..= i] at offsets 0..=bw.
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Factors a symmetric positive-definite matrix given by its lower band.
    ///
    /// `lower(i, out)` must write `A[i][j]` into `out[j - (i - bw)]` for
    /// `max(0, i - bw) <= j <= i`; `out` arrives zeroed.
    pub fn factor(n: usize, bw: usize, mut lower: impl FnMut(usize, &mut [f64])) -> Result<Self> {
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let row = &mut l[i * w..(i + 1) * w];
            lower(i, row);
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + (j + bw - i)];
                for k in k0..j {
                    s -= l[i * w + (k + bw - i)] * l[j * w + (k + bw - j)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Internal(format!(
                            "matrix not positive definite at pivot {i} (value {s:e})"
                        )));
                    }
                    l[i * w + bw] = s.sqrt();
                } else {
                    l[i * w + (j + bw - i)] = s / l[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bw + 1) + (j + self.bw - i)]
    }

    /// Solves `L x = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.bw)..i {
                s -= self.at(i, k) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn backward_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + self.bw + 1).min(self.n) {
                s -= self.at(k, i) * b[k];
            }
            b[i] = s / self.at(i, i);
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.forward_in_place(b);
        self.backward_in_place(b);
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.n).map(|i| self.at(i, i).ln()).sum::<f64>()
    }
}

pub type Mat3 = [[f64; 3]; 3];
pub type Vec3 = [f64; 3];

/// Cholesky factor of a symmetric positive-definite 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cholesky3 {
    l: Mat3,
}

impl Cholesky3 {
    pub fn factor(a: &Mat3) -> Result<Self> {
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let mut s = a[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Internal(format!(
                            "3x3 system not positive definite at pivot {i} (value {s:e})"
                        )));
                    }
                    l[i][i] = s.sqrt();
                } else {
                    l[i][j] = s / l[j][j];
                }
            }
        }
        Ok(Cholesky3 { l })
    }

    pub fn lower(&self) -> &Mat3 {
        &self.l
    }

    pub fn forward(&self, b: &Vec3) -> Vec3 {
        let l = &self.l;
        let mut x = [0.0; 3];
        for i in 0..3 {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i][k] * x[k];
            }
            x[i] = s / l[i][i];
        }
        x
    }

    pub fn backward(&self, b: &Vec3) -> Vec3 {
        let l = &self.l;
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut s = b[i];
            for k in (i + 1)..3 {
                s -= l[k][i] * x[k];
            }
            x[i] = s / l[i][i];
        }
        x
    }

    pub fn solve(&self, b: &Vec3) -> Vec3 {
        self.backward(&self.forward(b))
    }

    pub fn inverse(&self) -> Mat3 {
        let mut inv = [[0.0; 3]; 3];
        for c in 0..3 {
            let mut e = [0.0; 3];
            e[c] = 1.0;
            let col = self.solve(&e);
            for r in 0..3 {
                inv[r][c] = col[r];
            }
        }
        inv
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
