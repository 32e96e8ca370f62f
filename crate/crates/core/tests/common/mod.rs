//! Dense reference implementations built directly from the model definitions.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use smdenoise::sampler::ChainRng;
use smdenoise::{make_design, Raster, SpotMask};
use rand::Rng;

/// Weighted summed-difference operator: row `(i, j)` holds `+w` for each
/// in-lattice neighbour and `−Σw` on the diagonal.
pub fn dense_d(n1: usize, n2: usize, weight: impl Fn((usize, usize), (usize, usize)) -> f64) -> DMatrix<f64> {
    let n = n1 * n2;
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n1 {
        for j in 0..n2 {
            let r = i * n2 + j;
            for (di, dj) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                let (k, l) = (i as isize + di, j as isize + dj);
                if k < 0 || l < 0 || k as usize >= n1 || l as usize >= n2 {
                    continue;
                }
                let (k, l) = (k as usize, l as usize);
                let w = weight((i, j), (k, l));
                d[(r, k * n2 + l)] += w;
                d[(r, r)] -= w;
            }
        }
    }
    d
}

pub fn dense_igmrf_q(n1: usize, n2: usize) -> DMatrix<f64> {
    let d = dense_d(n1, n2, |_, _| 1.0);
    d.transpose() * d
}

pub fn dense_higmrf_q(n1: usize, n2: usize, mask: &SpotMask, lambda: f64) -> DMatrix<f64> {
    let d = dense_d(n1, n2, |(i, j), (k, l)| {
        if mask.get(i, j) == 1 {
            1.0
        } else {
            lambda.powi(1 - mask.get(k, l) as i32)
        }
    });
    d.transpose() * d
}

/// `Z` with columns `1, i/(n1−1), j/(n2−1)`.
pub fn dense_z(n1: usize, n2: usize) -> DMatrix<f64> {
    let mut z = DMatrix::<f64>::zeros(n1 * n2, 3);
    for i in 0..n1 {
        for j in 0..n2 {
            let r = i * n2 + j;
            z[(r, 0)] = 1.0;
            z[(r, 1)] = if n1 > 1 { i as f64 / (n1 - 1) as f64 } else { 0.0 };
            z[(r, 2)] = if n2 > 1 { j as f64 / (n2 - 1) as f64 } else { 0.0 };
        }
    }
    z
}

/// `Φ = I/κ_l + Z Zᵀ / q`.
pub fn dense_phi(n1: usize, n2: usize, kappa_l: f64, q: f64) -> DMatrix<f64> {
    let z = dense_z(n1, n2);
    DMatrix::<f64>::identity(n1 * n2, n1 * n2) / kappa_l + &z * z.transpose() / q
}

/// `(μ*, Σ*)` of the γ-marginalized field conditional.
pub fn dense_field_moments(
    y: &[f64],
    n1: usize,
    n2: usize,
    kappa_l: f64,
    kappa_f: f64,
    q_f: &DMatrix<f64>,
    q: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let phi_inv = dense_phi(n1, n2, kappa_l, q).cholesky().unwrap().inverse();
    let p = &phi_inv + q_f * kappa_f;
    let sigma = p.cholesky().unwrap().inverse();
    let mu = &sigma * (&phi_inv * DVector::from_column_slice(y));
    (mu, sigma)
}

pub fn to_dmatrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
}

pub fn random_mask(n1: usize, n2: usize, rng: &mut ChainRng) -> SpotMask {
    SpotMask::new(n1, n2, (0..n1 * n2).map(|_| rng.random_range(0..2u8)).collect()).unwrap()
}

pub fn random_raster(n1: usize, n2: usize, rng: &mut ChainRng) -> Raster {
    Raster::new(n1, n2, (0..n1 * n2).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn frobenius(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn design_check(n1: usize, n2: usize) -> bool {
    let d = make_design(n1, n2);
    let z = dense_z(n1, n2);
    (0..n1 * n2).all(|p| (0..3).all(|a| d.row(p)[a] == z[(p, a)]))
}
