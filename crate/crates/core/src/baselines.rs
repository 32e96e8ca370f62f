//! Classical comparison filters: Gaussian, box average, locally adaptive
//! Wiener and non-local means. Borders are handled by edge replication.

use crate::error::{invalid, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub gaussian_sigma: f64,
    pub gaussian_size: usize,
    pub average_size: usize,
    pub wiener_size: usize,
    pub nlm_patch: usize,
    pub nlm_search: usize,
    pub nlm_h: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            gaussian_sigma: 1.0,
            gaussian_size: 5,
            average_size: 3,
            wiener_size: 5,
            nlm_patch: 5,
            nlm_search: 11,
            nlm_h: 0.1,
        }
    }
}

fn check_size(name: &str, size: usize) -> Result<()> {
    if size < 3 || size % 2 == 0 {
        return Err(invalid(format!("{name} must be odd and >= 3, got {size}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(invalid(format!("{name} must be finite and positive, got {v}")));
    }
    Ok(())
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        check_positive("gaussian_sigma", self.gaussian_sigma)?;
        check_positive("nlm_h", self.nlm_h)?;
        check_size("gaussian_size", self.gaussian_size)?;
        check_size("average_size", self.average_size)?;
        check_size("wiener_size", self.wiener_size)?;
        check_size("nlm_patch", self.nlm_patch)?;
        check_size("nlm_search", self.nlm_search)
    }
}

#[inline]
fn clamped(r: &Raster, i: isize, j: isize) -> f64 {
    let ii = i.clamp(0, r.rows() as isize - 1) as usize;
    let jj = j.clamp(0, r.cols() as isize - 1) as usize;
    r.get(ii, jj)
}

/// Normalized `size x size` sampled Gaussian, row-major.
pub fn gaussian_kernel(sigma: f64, size: usize) -> Result<Vec<f64>> {
    check_positive("gaussian_sigma", sigma)?;
    check_size("gaussian_size", size)?;
    let r = (size / 2) as isize;
    let mut k = Vec::with_capacity(size * size);
    for a in -r..=r {
        for b in -r..=r {
            k.push((-((a * a + b * b) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= total);
    Ok(k)
}

fn convolve(y: &Raster, kernel: &[f64], size: usize) -> Result<Raster> {
    let r = (size / 2) as isize;
    Raster::from_fn(y.rows(), y.cols(), |i, j| {
        let mut acc = 0.0;
        let mut w = kernel.iter();
        for a in -r..=r {
            for b in -r..=r {
                acc += w.next().unwrap() * clamped(y, i as isize + a, j as isize + b);
            }
        }
        acc
    })
}

pub fn gaussian_filter(y: &Raster, sigma: f64, size: usize) -> Result<Raster> {
    let k = gaussian_kernel(sigma, size)?;
    convolve(y, &k, size)
}

pub fn average_filter(y: &Raster, size: usize) -> Result<Raster> {
    check_size("average_size", size)?;
    let k = vec![1.0 / (size * size) as f64; size * size];
    convolve(y, &k, size)
}

/// Locally adaptive Wiener filter. With local mean `μ`, local variance `σ²`
/// and noise floor `ν²` (mean of all local variances), each pixel becomes
/// `μ + max(σ² − ν², 0) / max(σ², ν²) · (y − μ)`.
pub fn wiener_filter(y: &Raster, size: usize) -> Result<Raster> {
    check_size("wiener_size", size)?;
    let r = (size / 2) as isize;
    let count = (size * size) as f64;
    let n = y.len();
    let mut means = Vec::with_capacity(n);
    let mut vars = Vec::with_capacity(n);
    for i in 0..y.rows() as isize {
        for j in 0..y.cols() as isize {
            let mut s = 0.0;
            for a in -r..=r {
                for b in -r..=r {
                    s += clamped(y, i + a, j + b);
                }
            }
            let mu = s / count;
            let mut ss = 0.0;
            for a in -r..=r {
                for b in -r..=r {
                    let d = clamped(y, i + a, j + b) - mu;
                    ss += d * d;
                }
            }
            means.push(mu);
            vars.push(ss / count);
        }
    }
    let noise = vars.iter().sum::<f64>() / n as f64;
    let out = y
        .data()
        .iter()
        .zip(means.iter().zip(&vars))
        .map(|(&v, (&mu, &var))| {
            let denom = var.max(noise);
            if denom <= 0.0 {
                mu
            } else {
                mu + (var - noise).max(0.0) / denom * (v - mu)
            }
        })
        .collect();
    Raster::new(y.rows(), y.cols(), out)
}

/// Non-local means: each pixel is the weighted average of the pixels in its
/// search window, with weight `exp(−SSD / h²)` where SSD compares the two
/// `patch x patch` neighbourhoods.
pub fn nlm_filter(y: &Raster, patch: usize, search: usize, h: f64) -> Result<Raster> {
    check_size("nlm_patch", patch)?;
    check_size("nlm_search", search)?;
    check_positive("nlm_h", h)?;
    let (n1, n2) = (y.rows() as isize, y.cols() as isize);
    let pr = (patch / 2) as isize;
    let sr = (search / 2) as isize;
    let h2 = h * h;
    Raster::from_fn(y.rows(), y.cols(), |i, j| {
        let (i, j) = (i as isize, j as isize);
        let mut num = 0.0;
        let mut den = 0.0;
        for k in (i - sr).max(0)..=(i + sr).min(n1 - 1) {
            for l in (j - sr).max(0)..=(j + sr).min(n2 - 1) {
                let mut ssd = 0.0;
                for a in -pr..=pr {
                    for b in -pr..=pr {
                        let d = clamped(y, i + a, j + b) - clamped(y, k + a, l + b);
                        ssd += d * d;
                    }
                }
                let w = (-ssd / h2).exp();
                num += w * y.get(k as usize, l as usize);
                den += w;
            }
        }
        num / den
    })
}
