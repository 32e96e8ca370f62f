//! Synthetic fluorescence-spot images: sums of isotropic Gaussian spots on a
//! zero background, observed under white Gaussian noise at a prescribed SNR.
//!
//! SNR is `10 log10(Var(signal) / Var(noise))` with population variances.
//! The drawn noise vector is rescaled so the realized SNR equals the target.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::raster::Raster;
use crate::sampler::{chain_rng, ChainRng};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n1: usize,
    pub n2: usize,
    pub n_images: usize,
    pub spots_min: usize,
    pub spots_max: usize,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub psf_sigma: f64,
    pub snr_db_min: f64,
    pub snr_db_max: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n1: 30,
            n2: 30,
            n_images: 50,
            spots_min: 3,
            spots_max: 8,
            amplitude_min: 0.5,
            amplitude_max: 1.0,
            psf_sigma: 1.2,
            snr_db_min: 5.0,
            snr_db_max: 10.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(invalid(format!("lattice must be non-empty, got {}x{}", self.n1, self.n2)));
        }
        if self.spots_min > self.spots_max {
            return Err(invalid("spots_min must not exceed spots_max"));
        }
        let ranges = [
            ("amplitude", self.amplitude_min, self.amplitude_max),
            ("snr_db", self.snr_db_min, self.snr_db_max),
        ];
        for (name, lo, hi) in ranges {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(invalid(format!("{name}_min must not exceed {name}_max")));
            }
        }
        if !(self.psf_sigma > 0.0) || !self.psf_sigma.is_finite() {
            return Err(invalid(format!("psf_sigma must be positive, got {}", self.psf_sigma)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spot {
    pub row: f64,
    pub col: f64,
    pub amplitude: f64,
}

/// Evaluates the spot sum on the lattice.
pub fn render_spots(n1: usize, n2: usize, spots: &[Spot], psf_sigma: f64) -> Result<Raster> {
    let two_s2 = 2.0 * psf_sigma * psf_sigma;
    Raster::from_fn(n1, n2, |i, j| {
        spots
            .iter()
            .map(|s| {
                let (di, dj) = (i as f64 - s.row, j as f64 - s.col);
                s.amplitude * (-(di * di + dj * dj) / two_s2).exp()
            })
            .sum()
    })
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Draws a spot count, centers uniform over the lattice's continuous extent
/// and amplitudes, then renders them.
pub fn generate_truth<R: Rng + ?Sized>(cfg: &SynthConfig, rng: &mut R) -> Result<(Raster, Vec<Spot>)> {
    cfg.validate()?;
    let count = rng.random_range(cfg.spots_min..=cfg.spots_max);
    let spots: Vec<Spot> = (0..count)
        .map(|_| Spot {
            row: uniform(rng, 0.0, (cfg.n1 - 1) as f64),
            col: uniform(rng, 0.0, (cfg.n2 - 1) as f64),
            amplitude: uniform(rng, cfg.amplitude_min, cfg.amplitude_max),
        })
        .collect();
    let truth = render_spots(cfg.n1, cfg.n2, &spots, cfg.psf_sigma)?;
    Ok((truth, spots))
}

pub fn snr_db(signal: &Raster, noise: &[f64]) -> f64 {
    let n = noise.len() as f64;
    let mu = noise.iter().sum::<f64>() / n;
    let var = noise.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    10.0 * (signal.variance() / var).log10()
}

/// Adds white Gaussian noise with `Var = Var(truth) / 10^(snr_db/10)`.
/// Returns the noisy raster and the realized SNR.
pub fn add_noise<R: Rng + ?Sized>(truth: &Raster, snr_db_target: f64, rng: &mut R) -> Result<(Raster, f64)> {
    let signal_var = truth.variance();
    if !(signal_var > 0.0) {
        return Err(Error::Domain("SNR is undefined for a constant ground truth".into()));
    }
    if !snr_db_target.is_finite() {
        return Err(invalid(format!("target SNR must be finite, got {snr_db_target}")));
    }
    let target_var = signal_var / 10f64.powf(snr_db_target / 10.0);
    let mut noise: Vec<f64> = (0..truth.len()).map(|_| rng.sample(StandardNormal)).collect();
    let n = noise.len() as f64;
    let mu = noise.iter().sum::<f64>() / n;
    let var = noise.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
    let scale = if var > 0.0 { (target_var / var).sqrt() } else { target_var.sqrt() };
    noise.iter_mut().for_each(|v| *v *= scale);
    let realized = snr_db(truth, &noise);
    let noisy = Raster::new(
        truth.rows(),
        truth.cols(),
        truth.data().iter().zip(&noise).map(|(t, e)| t + e).collect(),
    )?;
    Ok((noisy, realized))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPair {
    pub truth: Raster,
    pub noisy: Raster,
    pub spots: Vec<Spot>,
    pub target_snr_db: f64,
    pub realized_snr_db: f64,
}

/// Image `k` uses the generator seeded with `seed` on stream `k`, so each
/// pair is reproducible on its own.
pub fn image_rng(seed: u64, index: usize) -> ChainRng {
    let mut rng = chain_rng(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn generate_pair(cfg: &SynthConfig, index: usize) -> Result<SynthPair> {
    let mut rng = image_rng(cfg.seed, index);
    let (truth, spots) = generate_truth(cfg, &mut rng)?;
    let target = uniform(&mut rng, cfg.snr_db_min, cfg.snr_db_max);
    let (noisy, realized) = add_noise(&truth, target, &mut rng)?;
    Ok(SynthPair {
        truth,
        noisy,
        spots,
        target_snr_db: target,
        realized_snr_db: realized,
    })
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<Vec<SynthPair>> {
    cfg.validate()?;
    (0..cfg.n_images).map(|k| generate_pair(cfg, k)).collect()
}
