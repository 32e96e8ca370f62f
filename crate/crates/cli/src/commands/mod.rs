pub mod bench;
pub mod denoise;
pub mod diagnose;
pub mod synth;

use smdenoise::Raster;

use crate::error::{CliError, CliResult};

/// Parses `r0,c0,h,w`.
pub fn parse_crop(spec: &str) -> CliResult<(usize, usize, usize, usize)> {
    let parts: Vec<usize> = spec
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("--crop expects r0,c0,h,w as non-negative integers, got '{spec}'")))?;
    match parts[..] {
        [r0, c0, h, w] => Ok((r0, c0, h, w)),
        _ => Err(CliError::Usage(format!("--crop expects four values r0,c0,h,w, got '{spec}'"))),
    }
}

pub fn apply_crop(y: Raster, crop: Option<&str>) -> CliResult<Raster> {
    match crop {
        None => Ok(y),
        Some(spec) => {
            let (r0, c0, h, w) = parse_crop(spec)?;
            y.crop(r0, c0, h, w)
                .map_err(|e| CliError::Usage(format!("--crop {spec} on a {}x{} raster: {e}", y.rows(), y.cols())))
        }
    }
}
