//! Gibbs sampler over `(γ, κ_l, κ_f, f)` with an optional threshold-driven
//! spot-mask update for the heterogeneous prior.
//!
//! The field is drawn from the γ-marginalized conditional with precision
//! `P = Φ⁻¹ + κ_f Q = A − B M⁻¹ Bᵀ`, where `A = κ_l I + κ_f Q` is banded,
//! `B = κ_l Z` and `M = Q_γ + κ_l ZᵀZ`. `P` is the Schur complement of the
//! joint `(f, γ)` precision `[[A, B], [Bᵀ, M]]`, so a draw is obtained from
//! the block Cholesky factor of that joint matrix: one banded factorization
//! of `A` plus a 3x3 correction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{invalid, Error, Result};
use crate::lattice::{build_higmrf_precision, build_igmrf_precision, LatticeWeights, PrecisionMatrix};
use crate::linalg::{dot, BandedCholesky, Cholesky3, Mat3, Vec3};
use crate::model::{make_design, phi_inverse_apply, DesignMatrix, HyperParams, NoiseParams};
use crate::raster::{Normalization, Raster, SpotMask};

/// Generator used by every chain. ChaCha output is platform independent.
pub type ChainRng = ChaCha8Rng;

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_pixels(what: &str, len: usize, design: &DesignMatrix) -> Result<()> {
    if len != design.pixel_count() {
        return Err(invalid(format!(
            "{what} has {len} pixels, design has {}",
            design.pixel_count()
        )));
    }
    Ok(())
}

/// Moments `(m, C)` of `γ | y, f, κ_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaConditional {
    pub mean: Vec3,
    pub covariance: Mat3,
    precision_factor: Cholesky3,
}

impl GammaConditional {
    pub fn new(y: &Raster, f: &Raster, kappa_l: f64, design: &DesignMatrix, gamma_precision: f64) -> Result<Self> {
        y.ensure_same_shape(f)?;
        check_pixels("observation", y.len(), design)?;
        if !(kappa_l > 0.0) {
            return Err(invalid(format!("kappa_l must be positive, got {kappa_l}")));
        }
        // C⁻¹ = κ_l ZᵀZ + Q_γ, m = κ_l C Zᵀ(y − f)
        let factor = Cholesky3::factor(&design.core_matrix(kappa_l, gamma_precision))?;
        let resid: Vec<f64> = y.data().iter().zip(f.data()).map(|(a, b)| a - b).collect();
        let zr = design.transpose_apply(&resid);
        let s = factor.solve(&zr);
        Ok(GammaConditional {
            mean: [kappa_l * s[0], kappa_l * s[1], kappa_l * s[2]],
            covariance: factor.inverse(),
            precision_factor: factor,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec3 {
        let eps: Vec3 = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        // L⁻ᵀ ε has covariance (L Lᵀ)⁻¹ = C.
        let x = self.precision_factor.backward(&eps);
        [self.mean[0] + x[0], self.mean[1] + x[1], self.mean[2] + x[2]]
    }
}

/// Draws `γ ~ N(m, C)`.
pub fn sample_gamma<R: Rng + ?Sized>(
    y: &Raster,
    f: &Raster,
    kappa_l: f64,
    design: &DesignMatrix,
    gamma_precision: f64,
    rng: &mut R,
) -> Result<Vec3> {
    Ok(GammaConditional::new(y, f, kappa_l, design, gamma_precision)?.sample(rng))
}

/// Shape/scale pairs of the conditional Gamma laws of `κ_l` and `κ_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaConditional {
    pub alpha_l: f64,
    pub beta_l: f64,
    pub alpha_f: f64,
    pub beta_f: f64,
}

impl KappaConditional {
    pub fn new(
        y: &Raster,
        f: &Raster,
        gamma: &Vec3,
        design: &DesignMatrix,
        precision: &PrecisionMatrix,
        hp: &HyperParams,
    ) -> Result<Self> {
        y.ensure_same_shape(f)?;
        check_pixels("observation", y.len(), design)?;
        if precision.lattice() != f.shape() {
            return Err(Error::DimensionMismatch {
                expected: f.shape(),
                found: precision.lattice(),
            });
        }
        let half_n = y.len() as f64 / 2.0;
        let trend = design.apply(gamma);
        let rss: f64 = y
            .data()
            .iter()
            .zip(f.data())
            .zip(&trend)
            .map(|((y, f), t)| {
                let r = y - t - f;
                r * r
            })
            .sum();
        let roughness = precision.quad_form(f.data());
        Ok(KappaConditional {
            alpha_l: half_n + hp.alpha_l,
            beta_l: 1.0 / (rss / 2.0 + 1.0 / hp.beta_l),
            alpha_f: half_n + hp.alpha_f,
            beta_f: 1.0 / (roughness / 2.0 + 1.0 / hp.beta_f),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<NoiseParams> {
        let draw = |shape: f64, scale: f64, rng: &mut R| -> Result<f64> {
            let g = Gamma::new(shape, scale)
                .map_err(|e| Error::Internal(format!("gamma({shape}, {scale}): {e}")))?;
            Ok(g.sample(rng))
        };
        let kappa_l = draw(self.alpha_l, self.beta_l, rng)?;
        let kappa_f = draw(self.alpha_f, self.beta_f, rng)?;
        // A draw can underflow to exactly zero only for absurd hyper-parameters.
        NoiseParams::new(kappa_l.max(f64::MIN_POSITIVE), kappa_f.max(f64::MIN_POSITIVE))
    }
}

/// Draws `κ_l ~ Gamma(α_l*, β_l*)` then `κ_f ~ Gamma(α_f*, β_f*)` (shape/scale).
pub fn sample_kappas<R: Rng + ?Sized>(
    y: &Raster,
    f: &Raster,
    gamma: &Vec3,
    design: &DesignMatrix,
    precision: &PrecisionMatrix,
    hp: &HyperParams,
    rng: &mut R,
) -> Result<NoiseParams> {
    KappaConditional::new(y, f, gamma, design, precision, hp)?.sample(rng)
}

/// Factorized Gaussian conditional of the field given `y` and `θ`.
#[derive(Debug, Clone)]
pub struct FieldConditional {
    shape: (usize, usize),
    // order[t] is the pixel stored at factor position t
    order: Vec<usize>,
    chol: BandedCholesky,
    // G = L⁻¹ B in factor order, one row per position
    g: Vec<Vec3>,
    schur: Cholesky3,
    mean: Vec<f64>,
    gamma_mean: Vec3,
}

impl FieldConditional {
    pub fn new(
        y: &Raster,
        noise: NoiseParams,
        precision: &PrecisionMatrix,
        design: &DesignMatrix,
        gamma_precision: f64,
    ) -> Result<Self> {
        let (n1, n2) = y.shape();
        if precision.lattice() != (n1, n2) {
            return Err(Error::DimensionMismatch {
                expected: (n1, n2),
                found: precision.lattice(),
            });
        }
        check_pixels("observation", y.len(), design)?;
        let (kl, kf) = (noise.kappa_l(), noise.kappa_f());
        let numerical = |detail: String| Error::Numerical {
            n1,
            n2,
            kappa_l: kl,
            kappa_f: kf,
            detail,
        };

        // Order pixels along the longer axis so the band is 2 * min(n1, n2).
        let n = n1 * n2;
        let order: Vec<usize> = if n2 > n1 {
            (0..n).map(|t| (t % n1) * n2 + t / n1).collect()
        } else {
            (0..n).collect()
        };
        let mut position = vec![0; n];
        for (t, &p) in order.iter().enumerate() {
            position[p] = t;
        }
        let bw = 2 * n1.min(n2);

        let chol = BandedCholesky::factor(n, bw, |t, out| {
            for (c, v) in precision.row(order[t]) {
                let s = position[c];
                if s <= t {
                    out[s + bw - t] += kf * v;
                }
            }
            out[bw] += kl;
        })
        .map_err(|e| numerical(e.to_string()))?;

        let mut cols: [Vec<f64>; 3] = std::array::from_fn(|a| {
            order.iter().map(|&p| kl * design.row(p)[a]).collect()
        });
        for col in cols.iter_mut() {
            chol.forward_in_place(col);
        }
        let g: Vec<Vec3> = (0..n).map(|t| [cols[0][t], cols[1][t], cols[2][t]]).collect();

        let mut s = design.core_matrix(kl, gamma_precision);
        for a in 0..3 {
            for b in 0..3 {
                s[a][b] -= dot(&cols[a], &cols[b]);
            }
        }
        let schur = Cholesky3::factor(&s).map_err(|e| numerical(e.to_string()))?;

        // μ* = P⁻¹ Φ⁻¹ y = L⁻ᵀ (u + G S⁻¹ Gᵀ u), u = L⁻¹ Φ⁻¹ y
        let r = phi_inverse_apply(y.data(), kl, design, gamma_precision)?;
        let mut u: Vec<f64> = order.iter().map(|&p| r[p]).collect();
        chol.forward_in_place(&mut u);
        let gtu = [dot(&cols[0], &u), dot(&cols[1], &u), dot(&cols[2], &u)];
        let c = schur.solve(&gtu);
        for (ut, gt) in u.iter_mut().zip(&g) {
            *ut += gt[0] * c[0] + gt[1] * c[1] + gt[2] * c[2];
        }
        chol.backward_in_place(&mut u);
        let mut mean = vec![0.0; n];
        for (t, &p) in order.iter().enumerate() {
            mean[p] = u[t];
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(numerical("non-finite conditional mean".into()));
        }
        // E[γ | y, θ] = κ_l M⁻¹ Zᵀ (y − μ*), since E[γ | f, y, θ] is affine in f.
        let resid: Vec<f64> = y.data().iter().zip(&mean).map(|(a, b)| a - b).collect();
        let m = Cholesky3::factor(&design.core_matrix(kl, gamma_precision))?;
        let gm = m.solve(&design.transpose_apply(&resid));
        Ok(FieldConditional {
            shape: (n1, n2),
            order,
            chol,
            g,
            schur,
            mean,
            gamma_mean: [kl * gm[0], kl * gm[1], kl * gm[2]],
        })
    }

    /// Conditional mean `μ*` of the field, row-major.
    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Mean of `γ` under the joint conditional `p(f, γ | y, θ)`.
    pub fn gamma_mean(&self) -> Vec3 {
        self.gamma_mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Raster {
        self.sample_joint(rng).0
    }

    /// Draws `(f, γ)` jointly from `p(f, γ | y, θ)`; the field part alone is a
    /// draw from the γ-marginalized conditional.
    pub fn sample_joint<R: Rng + ?Sized>(&self, rng: &mut R) -> (Raster, Vec3) {
        let n = self.order.len();
        let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let eps_gamma: Vec3 = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        // Joint factor [[L, 0], [Gᵀ, L_S]]: x_γ = L_S⁻ᵀ ε_γ, x_f = L⁻ᵀ (ε_f − G x_γ)
        let xg = self.schur.backward(&eps_gamma);
        for (xt, gt) in x.iter_mut().zip(&self.g) {
            *xt -= gt[0] * xg[0] + gt[1] * xg[1] + gt[2] * xg[2];
        }
        self.chol.backward_in_place(&mut x);
        let mut out = self.mean.clone();
        for (t, &p) in self.order.iter().enumerate() {
            out[p] += x[t];
        }
        let f = Raster::new(self.shape.0, self.shape.1, out).expect("finite draw from a finite factor");
        let gm = &self.gamma_mean;
        (f, [gm[0] + xg[0], gm[1] + xg[1], gm[2] + xg[2]])
    }
}

/// Draws `f ~ N(μ*, (Φ⁻¹ + κ_f Q)⁻¹)`.
pub fn sample_field<R: Rng + ?Sized>(
    y: &Raster,
    noise: NoiseParams,
    precision: &PrecisionMatrix,
    design: &DesignMatrix,
    gamma_precision: f64,
    rng: &mut R,
) -> Result<Raster> {
    Ok(FieldConditional::new(y, noise, precision, design, gamma_precision)?.sample(rng))
}

/// Local-threshold spot classification: `e_ij = 1` iff
/// `f_ij >= μ_local + h σ_local` over the clipped `window x window` patch.
pub fn get_binary_image(f: &Raster, h: f64, window: usize) -> Result<SpotMask> {
    if window < 3 || window % 2 == 0 {
        return Err(invalid(format!("window must be odd and >= 3, got {window}")));
    }
    let (n1, n2) = f.shape();
    let r = window / 2;
    let mut labels = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        let rows = i.saturating_sub(r)..(i + r + 1).min(n1);
        for j in 0..n2 {
            let cols = j.saturating_sub(r)..(j + r + 1).min(n2);
            let count = (rows.len() * cols.len()) as f64;
            let mut sum = 0.0;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in rows.clone() {
                for l in cols.clone() {
                    let v = f.get(k, l);
                    sum += v;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let value = f.get(i, j);
            // A constant patch has σ = 0 and μ equal to the value exactly.
            let threshold = if lo == hi {
                value
            } else {
                let mu = sum / count;
                let mut ss = 0.0;
                for k in rows.clone() {
                    for l in cols.clone() {
                        let d = f.get(k, l) - mu;
                        ss += d * d;
                    }
                }
                mu + h * (ss / count).sqrt()
            };
            labels.push(u8::from(value >= threshold));
        }
    }
    SpotMask::new(n1, n2, labels)
}

/// Which prior drives the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorVariant {
    /// Homogeneous intrinsic GMRF; the mask stays at its initial all-background state.
    Igmrf,
    /// Heterogeneous prior re-weighted every iteration from the thresholded field.
    Higmrf,
}

impl PriorVariant {
    pub fn name(&self) -> &'static str {
        match self {
            PriorVariant::Igmrf => "igmrf",
            PriorVariant::Higmrf => "higmrf",
        }
    }
}

impl std::str::FromStr for PriorVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "igmrf" => Ok(PriorVariant::Igmrf),
            "higmrf" => Ok(PriorVariant::Higmrf),
            other => Err(invalid(format!("unknown prior variant {other:?} (expected igmrf or higmrf)"))),
        }
    }
}

impl std::fmt::Display for PriorVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Current state of one chain, in normalized intensity units.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub f: Raster,
    /// `γ^(t)`, drawn from `p(γ | y, f^(t-1), θ^(t-1))` at the start of the sweep.
    pub gamma: Vec3,
    /// Trend coefficients drawn jointly with `f^(t)`; `f + Zγ` is a draw of
    /// the noise-free image.
    pub field_gamma: Vec3,
    pub noise: NoiseParams,
    pub mask: SpotMask,
    pub precision: PrecisionMatrix,
    pub iteration: usize,
    pub rng: ChainRng,
}

/// One Gibbs chain over a normalized observation.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    y: Raster,
    design: DesignMatrix,
    hp: HyperParams,
    weights: LatticeWeights,
    variant: PriorVariant,
    state: ChainState,
}

impl GibbsChain {
    /// Starts at `f = y`, `γ = 0`, prior-mean precisions, all-background mask
    /// and the homogeneous precision.
    pub fn new(y: Raster, hp: &HyperParams, variant: PriorVariant) -> Result<Self> {
        hp.validate()?;
        let (n1, n2) = y.shape();
        let precision = build_igmrf_precision(n1, n2)?;
        let state = ChainState {
            f: y.clone(),
            gamma: [0.0; 3],
            field_gamma: [0.0; 3],
            noise: NoiseParams::new(hp.alpha_l * hp.beta_l, hp.alpha_f * hp.beta_f)?,
            mask: SpotMask::background(n1, n2)?,
            precision,
            iteration: 0,
            rng: chain_rng(hp.seed),
        };
        Ok(GibbsChain {
            design: make_design(n1, n2),
            weights: hp.weights()?,
            hp: hp.clone(),
            variant,
            y,
            state,
        })
    }

    pub fn state(&self) -> &ChainState {
        &self.state
    }

    pub fn variant(&self) -> PriorVariant {
        self.variant
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    /// Precision implied by the stored mask under this chain's prior.
    pub fn precision_for_mask(&self, mask: &SpotMask) -> Result<PrecisionMatrix> {
        let (n1, n2) = self.y.shape();
        match (self.variant, self.state.iteration) {
            (PriorVariant::Igmrf, _) | (PriorVariant::Higmrf, 0) => build_igmrf_precision(n1, n2),
            (PriorVariant::Higmrf, _) => build_higmrf_precision(n1, n2, mask, self.weights),
        }
    }

    /// `f + Zγ` for the current joint draw.
    pub fn signal(&self) -> Vec<f64> {
        let trend = self.design.apply(&self.state.field_gamma);
        self.state.f.data().iter().zip(trend).map(|(f, t)| f + t).collect()
    }

    /// Runs iteration `t = iteration + 1`: γ, then θ, then f from the
    /// γ-marginalized conditional, then (heterogeneous prior only) the mask
    /// and precision.
    pub fn step(&mut self) -> Result<()> {
        let hp = &self.hp;
        let st = &mut self.state;
        let gamma = sample_gamma(&self.y, &st.f, st.noise.kappa_l(), &self.design, hp.gamma_precision, &mut st.rng)?;
        let noise = sample_kappas(&self.y, &st.f, &gamma, &self.design, &st.precision, hp, &mut st.rng)?;
        let (f, field_gamma) = FieldConditional::new(&self.y, noise, &st.precision, &self.design, hp.gamma_precision)?
            .sample_joint(&mut st.rng);
        if self.variant == PriorVariant::Higmrf {
            let (n1, n2) = f.shape();
            st.mask = get_binary_image(&f, hp.h, hp.window)?;
            st.precision = build_higmrf_precision(n1, n2, &st.mask, self.weights)?;
        }
        st.gamma = gamma;
        st.field_gamma = field_gamma;
        st.noise = noise;
        st.f = f;
        st.iteration += 1;
        Ok(())
    }
}

/// Output of a full run. Images are in the input's units.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseResult {
    /// Post-burn-in average of the noise-free image `f^(t) + Zγ^(t)`.
    pub posterior_mean: Raster,
    /// Post-burn-in average of `f^(t)` alone. The field's level and planar
    /// trend are only weakly identified apart from `Zγ`, so this carries an
    /// arbitrary low-frequency offset.
    pub field_mean: Raster,
    pub final_mask: SpotMask,
    /// `(κ_l, κ_f)` after each iteration, in normalized units.
    pub theta_trace: Vec<(f64, f64)>,
    pub gamma_trace: Vec<Vec3>,
    /// Number of post-burn-in draws averaged.
    pub accepted_iterations: usize,
    pub normalization: Normalization,
}

impl DenoiseResult {
    /// Trace entries with `t > burn_in`.
    pub fn post_burn_in_theta(&self) -> &[(f64, f64)] {
        &self.theta_trace[self.theta_trace.len() - self.accepted_iterations..]
    }
}

/// Denoises `y`: normalizes to `[0, 1]`, runs `T` Gibbs iterations and
/// averages the draws after burn-in.
pub fn denoise(y: &Raster, hp: &HyperParams, variant: PriorVariant) -> Result<DenoiseResult> {
    hp.validate()?;
    let norm = Normalization::fit(y);
    let mut chain = GibbsChain::new(norm.forward(y), hp, variant)?;
    let n = y.len();
    let mut signal_sum = vec![0.0; n];
    let mut field_sum = vec![0.0; n];
    let mut theta_trace = Vec::with_capacity(hp.iterations);
    let mut gamma_trace = Vec::with_capacity(hp.iterations);
    let mut accepted = 0;
    for t in 1..=hp.iterations {
        chain.step()?;
        let st = chain.state();
        theta_trace.push((st.noise.kappa_l(), st.noise.kappa_f()));
        gamma_trace.push(st.gamma);
        if t > hp.burn_in {
            for (s, v) in signal_sum.iter_mut().zip(chain.signal()) {
                *s += v;
            }
            for (s, v) in field_sum.iter_mut().zip(st.f.data()) {
                *s += v;
            }
            accepted += 1;
        }
    }
    let average = |sum: Vec<f64>| Raster::new(y.rows(), y.cols(), sum.into_iter().map(|s| s / accepted as f64).collect());
    Ok(DenoiseResult {
        posterior_mean: norm.inverse(&average(signal_sum)?),
        field_mean: norm.inverse(&average(field_sum)?),
        final_mask: chain.state().mask.clone(),
        theta_trace,
        gamma_trace,
        accepted_iterations: accepted,
        normalization: norm,
    })
}

/// Runs `chains` independent chains with seeds `seed, seed + 1, …`
/// concurrently; results come back in seed order.
pub fn denoise_chains(y: &Raster, hp: &HyperParams, variant: PriorVariant, chains: usize) -> Result<Vec<DenoiseResult>> {
    hp.validate()?;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains as u64)
            .map(|k| {
                let hp = hp.clone().with_seed(hp.seed.wrapping_add(k));
                scope.spawn(move || denoise(y, &hp, variant))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}
