use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use smdenoise::baselines::{average_filter, gaussian_filter, nlm_filter, wiener_filter};
use smdenoise::metrics::{kld, psnr, rmse, ssim, DEFAULT_KLD_BINS};
use smdenoise::{denoise, PriorVariant, Raster};

use super::synth::{noisy_name, truth_name, MANIFEST};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{create_with_header, fmt_real, read_raster};

pub const REPORT_COLUMNS: &str =
    "image,method,rmse,psnr_db,kld,ssim,wall_ms,rmse_std,psnr_db_std,kld_std,ssim_std,wall_ms_std";
pub const DEFAULT_METHODS: &str = "ga,av,wi,nlm,igmrf,higmrf";

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Gaussian,
    Average,
    Wiener,
    Nlm,
    Prior(PriorVariant),
    /// Pre-computed outputs `denoised_k.csv` in a directory.
    External(PathBuf),
}

impl Method {
    pub fn parse(s: &str) -> CliResult<Method> {
        let s = s.trim();
        Ok(match s {
            "ga" => Method::Gaussian,
            "av" => Method::Average,
            "wi" => Method::Wiener,
            "nlm" => Method::Nlm,
            "igmrf" => Method::Prior(PriorVariant::Igmrf),
            "higmrf" => Method::Prior(PriorVariant::Higmrf),
            _ => match s.strip_prefix("external:") {
                Some(dir) if !dir.is_empty() => Method::External(PathBuf::from(dir)),
                _ => {
                    return Err(CliError::Usage(format!(
                        "unknown method '{s}' (expected ga, av, wi, nlm, igmrf, higmrf or external:<dir>)"
                    )))
                }
            },
        })
    }

    pub fn parse_list(list: &str) -> CliResult<Vec<Method>> {
        let methods: Vec<Method> = list.split(',').filter(|s| !s.trim().is_empty()).map(Method::parse).collect::<CliResult<_>>()?;
        if methods.is_empty() {
            return Err(CliError::Usage("--methods is empty".into()));
        }
        Ok(methods)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Gaussian => f.write_str("ga"),
            Method::Average => f.write_str("av"),
            Method::Wiener => f.write_str("wi"),
            Method::Nlm => f.write_str("nlm"),
            Method::Prior(v) => write!(f, "{v}"),
            Method::External(dir) => write!(f, "external:{}", dir.display()),
        }
    }
}

pub fn external_name(k: usize) -> String {
    format!("denoised_{k}.csv")
}

/// One (image, method) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub image: usize,
    pub method: usize,
    pub values: [f64; 5],
}

/// Column statistics over per-image rows: means and sample standard
/// deviations of rmse, psnr_db, kld, ssim and wall_ms.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub mean: [f64; 5],
    pub std: [f64; 5],
}

pub fn aggregate(rows: &[&Row]) -> Aggregate {
    let n = rows.len() as f64;
    let mut mean = [0.0; 5];
    let mut std = [0.0; 5];
    for c in 0..5 {
        mean[c] = rows.iter().map(|r| r.values[c]).sum::<f64>() / n;
        std[c] = if rows.len() > 1 {
            (rows.iter().map(|r| (r.values[c] - mean[c]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
    }
    Aggregate { mean, std }
}

fn read_manifest_indices(dir: &Path) -> CliResult<Vec<usize>> {
    let path = dir.join(MANIFEST);
    let file = File::open(&path).map_err(|e| CliError::io(&path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let headers = reader.headers().map_err(|e| CliError::io(&path, e))?.clone();
    let col = headers
        .iter()
        .position(|h| h == "index")
        .ok_or_else(|| CliError::io(&path, "manifest has no 'index' column"))?;
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| CliError::io(&path, e))?;
            r[col].parse().map_err(|_| CliError::io(&path, format!("bad index '{}'", &r[col])))
        })
        .collect()
}

fn metric_or_nan(what: &str, image: usize, method: &Method, v: smdenoise::Result<f64>) -> f64 {
    v.unwrap_or_else(|e| {
        eprintln!("warning: {what} for image {image}, method {method}: {e}");
        f64::NAN
    })
}

fn run_method(cfg: &Config, method: &Method, noisy: &Raster, image: usize) -> CliResult<Raster> {
    let fc = &cfg.filters;
    Ok(match method {
        Method::Gaussian => gaussian_filter(noisy, fc.gaussian_sigma, fc.gaussian_size)?,
        Method::Average => average_filter(noisy, fc.average_size)?,
        Method::Wiener => wiener_filter(noisy, fc.wiener_size)?,
        Method::Nlm => {
            // h is specified on the [0, 1] intensity scale
            let norm = smdenoise::Normalization::fit(noisy);
            norm.inverse(&nlm_filter(&norm.forward(noisy), fc.nlm_patch, fc.nlm_search, fc.nlm_h)?)
        }
        Method::Prior(v) => denoise(noisy, &cfg.hyper, *v)?.posterior_mean,
        Method::External(dir) => read_raster(&dir.join(external_name(image)))?,
    })
}

/// Benchmarks every method on every corpus pair and writes the report:
/// per-image rows ordered by method then image, then one aggregate row per
/// method.
pub fn run(cfg: &Config, corpus: &Path, methods: &[Method], report: &Path) -> CliResult<Vec<Row>> {
    let indices = read_manifest_indices(corpus)?;

    let mut gaps = Vec::new();
    for &k in &indices {
        for name in [truth_name(k), noisy_name(k)] {
            if !corpus.join(&name).is_file() {
                gaps.push(corpus.join(name).display().to_string());
            }
        }
        for m in methods {
            if let Method::External(dir) = m {
                let p = dir.join(external_name(k));
                if !p.is_file() {
                    gaps.push(p.display().to_string());
                }
            }
        }
    }
    if !gaps.is_empty() {
        return Err(CliError::MissingData(format!("missing files:\n  {}", gaps.join("\n  "))));
    }

    let pairs: Vec<(Raster, Raster)> = indices
        .iter()
        .map(|&k| Ok((read_raster(&corpus.join(truth_name(k)))?, read_raster(&corpus.join(noisy_name(k)))?)))
        .collect::<CliResult<_>>()?;

    let tasks: Vec<(usize, usize)> = (0..methods.len()).flat_map(|m| (0..indices.len()).map(move |i| (m, i))).collect();
    let mut rows: Vec<Row> = tasks
        .par_iter()
        .map(|&(m, i)| {
            let (truth, noisy) = &pairs[i];
            let image = indices[i];
            let method = &methods[m];
            let start = Instant::now();
            let est = run_method(cfg, method, noisy, image)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            if est.shape() != truth.shape() {
                return Err(CliError::MissingData(format!(
                    "image {image}, method {method}: estimate is {:?}, truth is {:?}",
                    est.shape(),
                    truth.shape()
                )));
            }
            Ok(Row {
                image,
                method: m,
                values: [
                    metric_or_nan("rmse", image, method, rmse(&est, truth)),
                    metric_or_nan("psnr", image, method, psnr(&est, truth)),
                    metric_or_nan("kld", image, method, kld(&est, truth, DEFAULT_KLD_BINS)),
                    metric_or_nan("ssim", image, method, ssim(&est, truth)),
                    wall_ms,
                ],
            })
        })
        .collect::<CliResult<_>>()?;
    rows.sort_by_key(|r| (r.method, r.image));

    let method_list: Vec<String> = methods.iter().map(ToString::to_string).collect();
    let header = format!(
        "# command=bench\n# methods={}\n# images={}\n# kld_bins={DEFAULT_KLD_BINS}\n# psnr peak is the estimate's maximum; *_std columns are sample standard deviations\n{}",
        method_list.join(","),
        indices.len(),
        cfg.echo()
    );
    let mut w = create_with_header(report, &header)?;
    let io = |e: std::io::Error| CliError::io(report, e);
    writeln!(w, "{REPORT_COLUMNS}").map_err(io)?;
    for r in &rows {
        let v: Vec<String> = r.values.iter().map(|&x| fmt_real(x)).collect();
        writeln!(w, "{},{},{},,,,,", r.image, methods[r.method], v.join(",")).map_err(io)?;
    }
    if !indices.is_empty() {
        for (m, method) in methods.iter().enumerate() {
            let mine: Vec<&Row> = rows.iter().filter(|r| r.method == m).collect();
            let agg = aggregate(&mine);
            let mean: Vec<String> = agg.mean.iter().map(|&x| fmt_real(x)).collect();
            let std: Vec<String> = agg.std.iter().map(|&x| fmt_real(x)).collect();
            writeln!(w, "mean,{method},{},{}", mean.join(","), std.join(",")).map_err(io)?;
        }
    }
    w.flush().map_err(io)?;
    Ok(rows)
}
