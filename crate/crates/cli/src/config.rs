//! Flat `key=value` run configuration covering the sampler, the baseline
//! filters and the synthetic corpus.

use std::path::Path;

use smdenoise::baselines::FilterConfig;
use smdenoise::synth::SynthConfig;
use smdenoise::HyperParams;

use crate::error::{CliError, CliResult};

/// Every key, in echo order.
pub const KEYS: &[&str] = &[
    "alpha_l",
    "beta_l",
    "alpha_f",
    "beta_f",
    "gamma_precision",
    "lambda",
    "h",
    "T",
    "window",
    "burn_in",
    "seed",
    "gaussian_sigma",
    "gaussian_size",
    "average_size",
    "wiener_size",
    "nlm_patch",
    "nlm_search",
    "nlm_h",
    "n1",
    "n2",
    "n_images",
    "spots_min",
    "spots_max",
    "amplitude_min",
    "amplitude_max",
    "psf_sigma",
    "snr_db_min",
    "snr_db_max",
    "synth_seed",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub hyper: HyperParams,
    pub filters: FilterConfig,
    pub synth: SynthConfig,
    /// `burn_in` was given explicitly; otherwise it tracks `T / 2`.
    burn_in_set: bool,
}

fn bad(key: &str, value: &str, what: &str) -> CliError {
    CliError::Usage(format!("config key '{key}': cannot parse '{value}' as {what}"))
}

fn real(key: &str, v: &str) -> CliResult<f64> {
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| bad(key, v, "a finite real"))
}

fn count(key: &str, v: &str) -> CliResult<usize> {
    v.parse().map_err(|_| bad(key, v, "a non-negative integer"))
}

fn seed(key: &str, v: &str) -> CliResult<u64> {
    v.parse().map_err(|_| bad(key, v, "a 64-bit unsigned integer"))
}

impl Config {
    /// Reads a config file; an absent path yields the defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Config> {
        let mut cfg = Config::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        for item in overrides {
            let (k, v) = split_pair(item).ok_or_else(|| CliError::Usage(format!("override '{item}' is not key=value")))?;
            cfg.set(k, v)?;
        }
        cfg.finish()?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = split_pair(line)
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got '{line}'", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> CliResult<()> {
        let (hp, fc, sc) = (&mut self.hyper, &mut self.filters, &mut self.synth);
        match key {
            "alpha_l" => hp.alpha_l = real(key, v)?,
            "beta_l" => hp.beta_l = real(key, v)?,
            "alpha_f" => hp.alpha_f = real(key, v)?,
            "beta_f" => hp.beta_f = real(key, v)?,
            "gamma_precision" => hp.gamma_precision = real(key, v)?,
            "lambda" => hp.lambda = real(key, v)?,
            "h" => hp.h = real(key, v)?,
            "T" => hp.iterations = count(key, v)?,
            "window" => hp.window = count(key, v)?,
            "burn_in" => {
                hp.burn_in = count(key, v)?;
                self.burn_in_set = true;
            }
            "seed" => hp.seed = seed(key, v)?,
            "gaussian_sigma" => fc.gaussian_sigma = real(key, v)?,
            "gaussian_size" => fc.gaussian_size = count(key, v)?,
            "average_size" => fc.average_size = count(key, v)?,
            "wiener_size" => fc.wiener_size = count(key, v)?,
            "nlm_patch" => fc.nlm_patch = count(key, v)?,
            "nlm_search" => fc.nlm_search = count(key, v)?,
            "nlm_h" => fc.nlm_h = real(key, v)?,
            "n1" => sc.n1 = count(key, v)?,
            "n2" => sc.n2 = count(key, v)?,
            "n_images" => sc.n_images = count(key, v)?,
            "spots_min" => sc.spots_min = count(key, v)?,
            "spots_max" => sc.spots_max = count(key, v)?,
            "amplitude_min" => sc.amplitude_min = real(key, v)?,
            "amplitude_max" => sc.amplitude_max = real(key, v)?,
            "psf_sigma" => sc.psf_sigma = real(key, v)?,
            "snr_db_min" => sc.snr_db_min = real(key, v)?,
            "snr_db_max" => sc.snr_db_max = real(key, v)?,
            "synth_seed" => sc.seed = seed(key, v)?,
            _ => return Err(CliError::Usage(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Resolves the burn-in default and validates every section.
    pub fn finish(&mut self) -> CliResult<()> {
        if !self.burn_in_set {
            self.hyper.burn_in = self.hyper.iterations / 2;
        }
        let usage = |section: &str, e: smdenoise::Error| CliError::Usage(format!("invalid {section} configuration: {e}"));
        if self.hyper.iterations < 2 {
            return Err(CliError::Usage(format!("config key 'T': need at least 2 iterations, got {}", self.hyper.iterations)));
        }
        self.hyper.validate().map_err(|e| usage("sampler", e))?;
        self.filters.validate().map_err(|e| usage("filter", e))?;
        if self.synth.n1 == 0 || self.synth.n2 == 0 {
            return Err(CliError::Usage("config keys 'n1'/'n2': lattice must be non-empty".into()));
        }
        self.synth.validate().map_err(|e| usage("synth", e))?;
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.hyper.seed = seed;
    }

    pub fn value(&self, key: &str) -> String {
        let (hp, fc, sc) = (&self.hyper, &self.filters, &self.synth);
        match key {
            "alpha_l" => hp.alpha_l.to_string(),
            "beta_l" => hp.beta_l.to_string(),
            "alpha_f" => hp.alpha_f.to_string(),
            "beta_f" => hp.beta_f.to_string(),
            "gamma_precision" => hp.gamma_precision.to_string(),
            "lambda" => hp.lambda.to_string(),
            "h" => hp.h.to_string(),
            "T" => hp.iterations.to_string(),
            "window" => hp.window.to_string(),
            "burn_in" => hp.burn_in.to_string(),
            "seed" => hp.seed.to_string(),
            "gaussian_sigma" => fc.gaussian_sigma.to_string(),
            "gaussian_size" => fc.gaussian_size.to_string(),
            "average_size" => fc.average_size.to_string(),
            "wiener_size" => fc.wiener_size.to_string(),
            "nlm_patch" => fc.nlm_patch.to_string(),
            "nlm_search" => fc.nlm_search.to_string(),
            "nlm_h" => fc.nlm_h.to_string(),
            "n1" => sc.n1.to_string(),
            "n2" => sc.n2.to_string(),
            "n_images" => sc.n_images.to_string(),
            "spots_min" => sc.spots_min.to_string(),
            "spots_max" => sc.spots_max.to_string(),
            "amplitude_min" => sc.amplitude_min.to_string(),
            "amplitude_max" => sc.amplitude_max.to_string(),
            "psf_sigma" => sc.psf_sigma.to_string(),
            "snr_db_min" => sc.snr_db_min.to_string(),
            "snr_db_max" => sc.snr_db_max.to_string(),
            "synth_seed" => sc.seed.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// The full effective configuration as `key=value` lines, parseable by
    /// [`Config::apply_text`].
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k}={}\n", self.value(k))).collect()
    }

    /// The configuration as `# key=value` comment lines.
    pub fn echo(&self) -> String {
        KEYS.iter().map(|k| format!("# {k}={}\n", self.value(k))).collect()
    }
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    (!k.is_empty()).then_some((k, v))
}
