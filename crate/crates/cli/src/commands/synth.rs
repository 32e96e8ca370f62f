use std::io::Write;
use std::path::Path;

use smdenoise::synth::generate_pair;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io::{create_with_header, fmt_real, write_raster};

pub const MANIFEST: &str = "manifest.csv";
pub const MANIFEST_COLUMNS: &str = "index,spot_count,centers,amplitudes,target_snr_db,realized_snr_db,seed";

pub fn truth_name(k: usize) -> String {
    format!("truth_{k}.csv")
}

pub fn noisy_name(k: usize) -> String {
    format!("noisy_{k}.csv")
}

/// Writes `truth_k.csv`, `noisy_k.csv` and `manifest.csv` into an existing
/// directory.
pub fn run(cfg: &Config, out: &Path) -> CliResult<()> {
    if !out.is_dir() {
        return Err(CliError::Io(format!("{}: output directory does not exist", out.display())));
    }
    let sc = &cfg.synth;
    let manifest = out.join(MANIFEST);
    let header = format!(
        "# command=synth\n{}# snr_db=10*log10(var(truth)/var(noise)); noise rescaled to hit the target exactly\n# centers are row:col pairs separated by ';'\n",
        cfg.echo()
    );
    let mut w = create_with_header(&manifest, &header)?;
    let io = |e: std::io::Error| CliError::io(&manifest, e);
    writeln!(w, "{MANIFEST_COLUMNS}").map_err(io)?;
    for k in 0..sc.n_images {
        let pair = generate_pair(sc, k)?;
        write_raster(&out.join(truth_name(k)), &pair.truth)?;
        write_raster(&out.join(noisy_name(k)), &pair.noisy)?;
        let centers: Vec<String> = pair.spots.iter().map(|s| format!("{}:{}", fmt_real(s.row), fmt_real(s.col))).collect();
        let amplitudes: Vec<String> = pair.spots.iter().map(|s| fmt_real(s.amplitude)).collect();
        writeln!(
            w,
            "{k},{},{},{},{},{},{}",
            pair.spots.len(),
            centers.join(";"),
            amplitudes.join(";"),
            fmt_real(pair.target_snr_db),
            fmt_real(pair.realized_snr_db),
            sc.seed
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
