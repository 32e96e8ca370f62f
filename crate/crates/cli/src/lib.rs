//! Command-line front end: synthetic corpus generation, denoising,
//! benchmarking against baseline filters, and multi-chain convergence
//! checks. Exit codes: 0 ok, 1 internal failure, 2 usage, 3 IO, 4 missing
//! data, 5 not converged, 6 degenerate traces.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use smdenoise::PriorVariant;

use commands::bench::{Method, DEFAULT_METHODS};
use commands::denoise::DenoiseArgs;
use commands::diagnose::DiagnoseArgs;
use config::Config;
use error::{exit, CliResult};

#[derive(Debug, Parser)]
#[command(name = "smdenoise", version, about = "Bayesian GMRF denoising of fluorescence spot images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// key=value configuration file ('#' starts a comment)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus with manifest
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        /// Existing output directory
        #[arg(long)]
        out: PathBuf,
    },
    /// Denoise one raster (.csv, .pgm or any common image format)
    Denoise {
        input: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "higmrf")]
        variant: PriorVariant,
        /// Sampler seed; overrides the config
        #[arg(long)]
        seed: Option<u64>,
        /// Process only the sub-lattice r0,c0,h,w
        #[arg(long)]
        crop: Option<String>,
        /// Posterior mean output (.csv or .pgm)
        #[arg(long)]
        out: PathBuf,
        /// Final mask output [default: <out stem>_mask.<ext>]
        #[arg(long)]
        mask: Option<PathBuf>,
        /// Trace output [default: <out stem>_trace.csv]
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Score methods over a corpus directory
    Bench {
        corpus: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated: ga, av, wi, nlm, igmrf, higmrf, external:<dir>
        #[arg(long, default_value = DEFAULT_METHODS)]
        methods: String,
        #[arg(long)]
        report: PathBuf,
    },
    /// Run several chains and check PSRF of the noise precisions
    Diagnose {
        input: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "higmrf")]
        variant: PriorVariant,
        #[arg(long, default_value_t = 4)]
        chains: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        crop: Option<String>,
        #[arg(long)]
        report: PathBuf,
    },
}

fn load(args: &ConfigArgs, seed: Option<u64>) -> CliResult<Config> {
    let mut cfg = Config::load(args.config.as_deref(), &args.set)?;
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    Ok(cfg)
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Synth { config, out } => commands::synth::run(&load(config, None)?, out),
        Command::Denoise { input, config, variant, seed, crop, out, mask, trace } => commands::denoise::run(
            &load(config, *seed)?,
            &DenoiseArgs {
                input,
                variant: *variant,
                crop: crop.as_deref(),
                out,
                mask: mask.as_deref(),
                trace: trace.as_deref(),
            },
        ),
        Command::Bench { corpus, config, methods, report } => {
            let methods = Method::parse_list(methods)?;
            commands::bench::run(&load(config, None)?, corpus, &methods, report).map(|_| ())
        }
        Command::Diagnose { input, config, variant, chains, seed, crop, report } => commands::diagnose::run(
            &load(config, *seed)?,
            &DiagnoseArgs {
                input,
                variant: *variant,
                chains: *chains,
                crop: crop.as_deref(),
                report,
            },
        ),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::USAGE } else { exit::OK };
        }
    };
    match execute(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
