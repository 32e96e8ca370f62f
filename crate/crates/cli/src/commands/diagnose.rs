use std::io::Write;
use std::path::Path;

use smdenoise::diagnostics::{convergence_report, TraceSet, PSRF_THRESHOLD};
use smdenoise::{denoise_chains, PriorVariant};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{create_with_header, fmt_real, read_raster};

pub const REPORT_COLUMNS: &str = "parameter,psrf,threshold,converged";

#[derive(Debug, Clone)]
pub struct DiagnoseArgs<'a> {
    pub input: &'a Path,
    pub variant: PriorVariant,
    pub chains: usize,
    pub crop: Option<&'a str>,
    pub report: &'a Path,
}

/// Runs `m` chains with seeds `seed, …, seed + m − 1` and computes the PSRF
/// of `κ_l` and `κ_f` over the post-burn-in segment. Returns `NotConverged`
/// after writing the report when any PSRF reaches the threshold, or when
/// fewer than two post-burn-in draws exist.
pub fn run(cfg: &Config, args: &DiagnoseArgs) -> CliResult<()> {
    if args.chains < 2 {
        return Err(CliError::Usage(format!("--chains must be at least 2, got {}", args.chains)));
    }
    let y = super::apply_crop(read_raster(args.input)?, args.crop)?;
    let runs = denoise_chains(&y, &cfg.hyper, args.variant, args.chains)?;
    let length = cfg.hyper.iterations - cfg.hyper.burn_in;

    let header = format!(
        "# command=diagnose\n# variant={}\n# chains={}\n# crop={}\n# post_burn_in_length={length}\n{}",
        args.variant,
        args.chains,
        args.crop.unwrap_or("none"),
        cfg.echo()
    );
    let mut w = create_with_header(args.report, &header)?;
    let io = |e: std::io::Error| CliError::io(args.report, e);
    writeln!(w, "{REPORT_COLUMNS}").map_err(io)?;

    let names = ["kappa_l", "kappa_f"];
    if length < 2 {
        writeln!(w, "# fewer than two post-burn-in draws: PSRF undefined, run must be lengthened").map_err(io)?;
        for name in names {
            writeln!(w, "{name},nan,{PSRF_THRESHOLD},false").map_err(io)?;
        }
        w.flush().map_err(io)?;
        return Err(CliError::NotConverged(format!(
            "only {length} post-burn-in draw(s); lengthen the run (T={}, burn_in={})",
            cfg.hyper.iterations, cfg.hyper.burn_in
        )));
    }

    let kl = TraceSet::new(runs.iter().map(|r| r.post_burn_in_theta().iter().map(|t| t.0).collect()).collect())?;
    let kf = TraceSet::new(runs.iter().map(|r| r.post_burn_in_theta().iter().map(|t| t.1).collect()).collect())?;
    let report = convergence_report([(names[0], &kl), (names[1], &kf)])?;
    for p in &report.parameters {
        writeln!(w, "{},{},{PSRF_THRESHOLD},{}", p.name, fmt_real(p.psrf), p.converged).map_err(io)?;
    }
    w.flush().map_err(io)?;
    if report.converged {
        Ok(())
    } else {
        let failing: Vec<String> = report.failing().map(|p| format!("{}={}", p.name, fmt_real(p.psrf))).collect();
        Err(CliError::NotConverged(format!(
            "PSRF at or above {PSRF_THRESHOLD}: {}; lengthen the run",
            failing.join(", ")
        )))
    }
}
