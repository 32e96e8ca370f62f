//! Image quality measures of an estimate against ground truth.

use crate::error::{invalid, Error, Result};
use crate::raster::Raster;

/// Number of histogram bins used for the Kullback-Leibler distance.
pub const DEFAULT_KLD_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    /// `+inf` when the estimate reproduces the truth exactly.
    pub psnr_db: f64,
    pub kld: f64,
    pub ssim: f64,
}

pub fn rmse(estimate: &Raster, truth: &Raster) -> Result<f64> {
    estimate.ensure_same_shape(truth)?;
    let sse: f64 = estimate
        .data()
        .iter()
        .zip(truth.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sse / estimate.len() as f64).sqrt())
}

/// `20 log10(max(estimate) / RMSE)`; the peak is taken over the estimate.
pub fn psnr(estimate: &Raster, truth: &Raster) -> Result<f64> {
    let e = rmse(estimate, truth)?;
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = estimate.max();
    if !(peak > 0.0) {
        return Err(Error::Domain(format!("PSNR needs a positive peak, estimate max is {peak}")));
    }
    Ok(20.0 * (peak / e).log10())
}

/// Discrete `Σ p_truth log(p_truth / p_estimate)` over `n_bins` equal-width
/// bins spanning the joint range. Every bin mass gets `1/N` added before
/// normalization so empty bins stay finite.
pub fn kld(estimate: &Raster, truth: &Raster, n_bins: usize) -> Result<f64> {
    estimate.ensure_same_shape(truth)?;
    if n_bins < 2 {
        return Err(invalid(format!("need at least 2 bins, got {n_bins}")));
    }
    let lo = estimate.min().min(truth.min());
    let hi = estimate.max().max(truth.max());
    if hi <= lo {
        return Ok(0.0);
    }
    let n = truth.len() as f64;
    let histogram = |r: &Raster| {
        let mut mass = vec![1.0 / n; n_bins];
        for &v in r.data() {
            let b = (((v - lo) / (hi - lo)) * n_bins as f64) as usize;
            mass[b.min(n_bins - 1)] += 1.0 / n;
        }
        let total: f64 = mass.iter().sum();
        mass.iter_mut().for_each(|m| *m /= total);
        mass
    };
    let p = histogram(truth);
    let q = histogram(estimate);
    Ok(p.iter().zip(&q).map(|(p, q)| p * (p / q).ln()).sum::<f64>().max(0.0))
}

/// Global universal quality index (SSIM with `C1 = C2 = 0`), population moments.
pub fn ssim(estimate: &Raster, truth: &Raster) -> Result<f64> {
    estimate.ensure_same_shape(truth)?;
    let n = estimate.len() as f64;
    let (mx, my) = (estimate.mean(), truth.mean());
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in estimate.data().iter().zip(truth.data()) {
        let (dx, dy) = (a - mx, b - my);
        vx += dx * dx;
        vy += dy * dy;
        cxy += dx * dy;
    }
    let (vx, vy, cxy) = (vx / n, vy / n, cxy / n);
    let denom = (mx * mx + my * my) * (vx + vy);
    if denom.abs() < 1e-12 {
        return Err(Error::Unstable(format!("UQI denominator {denom:e} is too close to zero")));
    }
    Ok((2.0 * mx * my) * (2.0 * cxy) / denom)
}

pub fn evaluate(estimate: &Raster, truth: &Raster) -> Result<MetricsReport> {
    Ok(MetricsReport {
        rmse: rmse(estimate, truth)?,
        psnr_db: psnr(estimate, truth)?,
        kld: kld(estimate, truth, DEFAULT_KLD_BINS)?,
        ssim: ssim(estimate, truth)?,
    })
}
