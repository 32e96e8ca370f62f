//! Observation model `y = Zγ + f + ε`, its hyper-parameters and the
//! γ-marginalized likelihood covariance `Φ = κ_l⁻¹ I + Z Q_γ⁻¹ Zᵀ`.

use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeWeights, PrecisionMatrix};
use crate::linalg::{Cholesky3, Mat3, Vec3};
use crate::raster::Raster;

/// Hyper-parameters of the hierarchical model and the Gibbs run.
///
/// Defaults follow the synthetic-image configuration: `α_l = 1, β_l = 10,
/// α_f = 10, β_f = 0.01, h = 0.1, T = 100`, `Q_γ = 10⁻³ I`, `λ = 50`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub alpha_l: f64,
    pub beta_l: f64,
    pub alpha_f: f64,
    pub beta_f: f64,
    /// `Q_γ = gamma_precision · I`.
    pub gamma_precision: f64,
    pub lambda: f64,
    /// Relative local threshold used by the mask update.
    pub h: f64,
    /// Total Gibbs iterations `T`.
    pub iterations: usize,
    /// Side of the square local-threshold window (odd).
    pub window: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            alpha_l: 1.0,
            beta_l: 10.0,
            alpha_f: 10.0,
            beta_f: 0.01,
            gamma_precision: 1e-3,
            lambda: LatticeWeights::DEFAULT_LAMBDA,
            h: 0.1,
            iterations: 100,
            window: 7,
            burn_in: 50,
            seed: 0,
        }
    }
}

impl HyperParams {
    /// Sets `T` and the default burn-in `T / 2`.
    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = iterations / 2;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn weights(&self) -> Result<LatticeWeights> {
        LatticeWeights::new(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_l", self.alpha_l),
            ("beta_l", self.beta_l),
            ("alpha_f", self.alpha_f),
            ("beta_f", self.beta_f),
            ("gamma_precision", self.gamma_precision),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if !self.h.is_finite() {
            return Err(invalid(format!("h must be finite, got {}", self.h)));
        }
        self.weights()?;
        if self.iterations == 0 {
            return Err(invalid("T must be positive"));
        }
        if self.burn_in == 0 || self.burn_in >= self.iterations {
            return Err(invalid(format!(
                "burn_in must satisfy 0 < burn_in < T, got burn_in={} T={}",
                self.burn_in, self.iterations
            )));
        }
        if self.window < 3 || self.window % 2 == 0 {
            return Err(invalid(format!("window must be odd and >= 3, got {}", self.window)));
        }
        Ok(())
    }
}

/// Observation and field precisions `θ = (κ_l, κ_f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    kappa_l: f64,
    kappa_f: f64,
}

impl NoiseParams {
    pub fn new(kappa_l: f64, kappa_f: f64) -> Result<Self> {
        for (name, v) in [("kappa_l", kappa_l), ("kappa_f", kappa_f)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be finite and positive, got {v}")));
            }
        }
        Ok(NoiseParams { kappa_l, kappa_f })
    }

    pub fn kappa_l(&self) -> f64 {
        self.kappa_l
    }

    pub fn kappa_f(&self) -> f64 {
        self.kappa_f
    }
}

/// Trend design `Z` (N x 3): intercept, normalized row, normalized column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n1: usize,
    n2: usize,
    rows: Vec<Vec3>,
}

/// Builds the 3-column trend design for an `n1 x n2` lattice.
pub fn make_design(n1: usize, n2: usize) -> DesignMatrix {
    let coord = |k: usize, n: usize| if n > 1 { k as f64 / (n - 1) as f64 } else { 0.0 };
    let mut rows = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            rows.push([1.0, coord(i, n1), coord(j, n2)]);
        }
    }
    DesignMatrix { n1, n2, rows }
}

impl DesignMatrix {
    pub fn pixel_count(&self) -> usize {
        self.rows.len()
    }

    pub fn lattice(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn row(&self, pixel: usize) -> &Vec3 {
        &self.rows[pixel]
    }

    /// `ZᵀZ`.
    pub fn gram(&self) -> Mat3 {
        let mut g = [[0.0; 3]; 3];
        for z in &self.rows {
            for a in 0..3 {
                for b in 0..3 {
                    g[a][b] += z[a] * z[b];
                }
            }
        }
        g
    }

    /// `Z γ`.
    pub fn apply(&self, gamma: &Vec3) -> Vec<f64> {
        self.rows
            .iter()
            .map(|z| z[0] * gamma[0] + z[1] * gamma[1] + z[2] * gamma[2])
            .collect()
    }

    /// `Zᵀ v`.
    pub fn transpose_apply(&self, v: &[f64]) -> Vec3 {
        assert_eq!(v.len(), self.rows.len(), "vector length must match pixel count");
        let mut out = [0.0; 3];
        for (z, x) in self.rows.iter().zip(v) {
            out[0] += z[0] * x;
            out[1] += z[1] * x;
            out[2] += z[2] * x;
        }
        out
    }

    /// `M = Q_γ + κ_l ZᵀZ`, the 3x3 core of every low-rank identity here.
    pub fn core_matrix(&self, kappa_l: f64, gamma_precision: f64) -> Mat3 {
        let mut m = self.gram();
        for (a, row) in m.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v *= kappa_l;
                if a == b {
                    *v += gamma_precision;
                }
            }
        }
        m
    }
}

/// `Φ⁻¹ v = κ_l v − κ_l² Z M⁻¹ Zᵀ v` with `M = Q_γ + κ_l ZᵀZ`.
pub fn phi_inverse_apply(
    v: &[f64],
    kappa_l: f64,
    design: &DesignMatrix,
    gamma_precision: f64,
) -> Result<Vec<f64>> {
    if v.len() != design.pixel_count() {
        return Err(invalid(format!(
            "vector of length {} does not match {} pixels",
            v.len(),
            design.pixel_count()
        )));
    }
    if !(kappa_l > 0.0) {
        return Err(invalid(format!("kappa_l must be positive, got {kappa_l}")));
    }
    let m = Cholesky3::factor(&design.core_matrix(kappa_l, gamma_precision))?;
    let c = m.solve(&design.transpose_apply(v));
    let zc = design.apply(&c);
    let k2 = kappa_l * kappa_l;
    Ok(v.iter().zip(zc).map(|(x, t)| kappa_l * x - k2 * t).collect())
}

/// `Φ v = v / κ_l + Z (Zᵀ v) / q` for `Q_γ = q I`.
pub fn phi_apply(v: &[f64], kappa_l: f64, design: &DesignMatrix, gamma_precision: f64) -> Vec<f64> {
    let t = design.transpose_apply(v);
    let zt = design.apply(&[t[0] / gamma_precision, t[1] / gamma_precision, t[2] / gamma_precision]);
    v.iter().zip(zt).map(|(x, a)| x / kappa_l + a).collect()
}

/// Unnormalized log density `−½ κ_f fᵀ Q f` of the (improper) field prior.
pub fn log_prior_field(f: &Raster, precision: &PrecisionMatrix, kappa_f: f64) -> Result<f64> {
    if precision.lattice() != f.shape() {
        return Err(Error::DimensionMismatch {
            expected: precision.lattice(),
            found: f.shape(),
        });
    }
    Ok(-0.5 * kappa_f * precision.quad_form(f.data()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_igmrf_precision;

    #[test]
    fn design_small_lattices() {
        let d = make_design(1, 2);
        assert_eq!(d.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(d.row(1), &[1.0, 0.0, 1.0]);
        let d = make_design(2, 2);
        let rows: Vec<Vec3> = (0..4).map(|p| *d.row(p)).collect();
        assert_eq!(rows, vec![[1.0, 0.0, 0.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0], [1.0, 1.0, 1.0]]);
    }

    #[test]
    fn tight_prior_pins_gamma() {
        let d = make_design(3, 4);
        let v: Vec<f64> = (0..12).map(|k| (k as f64 * 0.7).sin()).collect();
        let out = phi_inverse_apply(&v, 2.0, &d, 1e9).unwrap();
        for (o, x) in out.iter().zip(&v) {
            assert!((o - 2.0 * x).abs() <= 1e-4 * (2.0 * x).abs().max(1e-3));
        }
    }

    #[test]
    fn phi_round_trip() {
        let d = make_design(4, 3);
        let v: Vec<f64> = (0..12).map(|k| (k as f64).cos()).collect();
        let phi_v = phi_apply(&v, 0.7, &d, 1e-3);
        let back = phi_inverse_apply(&phi_v, 0.7, &d, 1e-3).unwrap();
        for (a, b) in back.iter().zip(&v) {
            assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn field_prior_values() {
        let q = build_igmrf_precision(2, 2).unwrap();
        let c = Raster::filled(2, 2, 3.3).unwrap();
        assert!(log_prior_field(&c, &q, 1.0).unwrap().abs() < 1e-12);
        let e1 = Raster::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(log_prior_field(&e1, &q, 1.0).unwrap(), -3.0);
        assert_eq!(log_prior_field(&e1, &q, 2.0).unwrap(), -6.0);
        let wrong = Raster::zeros(1, 4).unwrap();
        assert!(log_prior_field(&wrong, &q, 1.0).is_err());
    }

    #[test]
    fn hyper_param_validation() {
        assert!(HyperParams::default().validate().is_ok());
        let hp = HyperParams::default().with_iterations(2);
        assert_eq!(hp.burn_in, 1);
        assert!(hp.validate().is_ok());
        let bad = HyperParams { window: 4, ..HyperParams::default() };
        assert!(bad.validate().is_err());
        let bad = HyperParams { burn_in: 100, ..HyperParams::default() };
        assert!(bad.validate().is_err());
        let bad = HyperParams { beta_f: 0.0, ..HyperParams::default() };
        assert!(bad.validate().is_err());
        let bad = HyperParams { lambda: 0.5, ..HyperParams::default() };
        assert!(bad.validate().is_err());
        assert!(NoiseParams::new(1.0, 0.0).is_err());
    }
}
