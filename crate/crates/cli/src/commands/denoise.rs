use std::io::Write;
use std::path::{Path, PathBuf};

use smdenoise::{denoise, PriorVariant};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{create_with_header, fmt_real, read_raster, write_mask, write_raster};

pub const TRACE_COLUMNS: &str = "iteration,kappa_l,kappa_f,gamma1,gamma2,gamma3";

#[derive(Debug, Clone)]
pub struct DenoiseArgs<'a> {
    pub input: &'a Path,
    pub variant: PriorVariant,
    pub crop: Option<&'a str>,
    pub out: &'a Path,
    pub mask: Option<&'a Path>,
    pub trace: Option<&'a Path>,
}

/// `<dir>/<stem><suffix>`, used for the default mask and trace paths.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}{suffix}"))
}

pub fn run(cfg: &Config, args: &DenoiseArgs) -> CliResult<()> {
    let y = super::apply_crop(read_raster(args.input)?, args.crop)?;
    let result = denoise(&y, &cfg.hyper, args.variant)?;

    let ext = args.out.extension().and_then(|e| e.to_str()).unwrap_or("csv");
    let mask_path = args.mask.map(Path::to_path_buf).unwrap_or_else(|| sibling(args.out, &format!("_mask.{ext}")));
    let trace_path = args.trace.map(Path::to_path_buf).unwrap_or_else(|| sibling(args.out, "_trace.csv"));

    write_raster(args.out, &result.posterior_mean)?;
    write_mask(&mask_path, &result.final_mask)?;

    let header = format!(
        "# command=denoise\n# variant={}\n# crop={}\n# lattice={}x{}\n{}# kappa values are in normalized intensity units (input mapped to [0,1])\n",
        args.variant,
        args.crop.unwrap_or("none"),
        y.rows(),
        y.cols(),
        cfg.echo()
    );
    let mut w = create_with_header(&trace_path, &header)?;
    let io = |e: std::io::Error| CliError::io(&trace_path, e);
    writeln!(w, "{TRACE_COLUMNS}").map_err(io)?;
    for (t, (&(kl, kf), g)) in result.theta_trace.iter().zip(&result.gamma_trace).enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            t + 1,
            fmt_real(kl),
            fmt_real(kf),
            fmt_real(g[0]),
            fmt_real(g[1]),
            fmt_real(g[2])
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
