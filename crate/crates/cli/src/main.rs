//! Command-line front end: config ingestion, scan orchestration, fitting,
//! and emission of CSV/JSON result files.
//!
//! Exit codes: 0 success, 2 configuration error, 3 simulation or fit
//! failure, 130 interrupted (completed points are flushed first).

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

mod commands;
mod output;

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "rotodop",
    about = "Rotational Doppler dark-resonance simulation and fitting toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args)]
pub struct CommonArgs {
    /// Path to the TOML run configuration.
    pub config: PathBuf,
    /// Output directory (falls back to $ROTODOP_OUTPUT_DIR, then ".").
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Primary data format; a JSON sidecar with the configuration and its
    /// fingerprint is always written.
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Worker threads for parallel sweep points (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Override the config seed for synthetic noise.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl CommonArgs {
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os("ROTODOP_OUTPUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Depth dataset CSV (r_um,depth,depth_err). Synthesized from the
    /// config when omitted.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Persistent residual-cache file for the full-model fits.
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the IR1 detuning and write the fluorescence spectrum.
    Spectrum(CommonArgs),
    /// Dark-resonance depth and width versus radial position.
    RadialScan(CommonArgs),
    /// Depth versus the ion's azimuthal position at fixed radius.
    AngularScan(CommonArgs),
    /// Radial scans at two beam waists plus a pointwise comparison summary.
    WaistCompare(CommonArgs),
    /// Fit depth-vs-radius data with the J0^2 shorthand model.
    FitBessel(FitArgs),
    /// Fit depth-vs-radius data with the full 8-level forward model.
    FitFull(FitArgs),
    /// Chi-squared velocity interval scan with the full model.
    IntervalScan(FitArgs),
    /// Tabulate the three-level depth formula and its J0^2 approximation.
    AnalyticDepth(CommonArgs),
}

fn install_cancel_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler_flag = flag.clone();
    // best effort: if no handler can be installed, Ctrl-C simply kills the
    // process the usual way
    let _ = ctrlc::set_handler(move || {
        handler_flag.store(true, Ordering::Relaxed);
        eprintln!("interrupt received, flushing completed points...");
    });
    flag
}

fn configure_pool(jobs: Option<usize>) {
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<rotodop::config::RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = rotodop::config::RunConfig::from_toml(&text)
        .map_err(|e| CliError::Config(e.to_string()))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cancel = install_cancel_flag();

    let run = || -> Result<(), CliError> {
        match &cli.command {
            Command::Spectrum(args) => {
                configure_pool(args.jobs);
                commands::spectrum(args, &load_config(&args.config, args.seed)?, &cancel)
            }
            Command::RadialScan(args) => {
                configure_pool(args.jobs);
                commands::radial_scan(args, &load_config(&args.config, args.seed)?, &cancel)
            }
            Command::AngularScan(args) => {
                configure_pool(args.jobs);
                commands::angular_scan(args, &load_config(&args.config, args.seed)?, &cancel)
            }
            Command::WaistCompare(args) => {
                configure_pool(args.jobs);
                commands::waist_compare(args, &load_config(&args.config, args.seed)?, &cancel)
            }
            Command::FitBessel(args) => {
                configure_pool(args.common.jobs);
                commands::fit_bessel(args, &load_config(&args.common.config, args.common.seed)?)
            }
            Command::FitFull(args) => {
                configure_pool(args.common.jobs);
                commands::fit_full(
                    args,
                    &load_config(&args.common.config, args.common.seed)?,
                    &cancel,
                )
            }
            Command::IntervalScan(args) => {
                configure_pool(args.common.jobs);
                commands::interval_scan(
                    args,
                    &load_config(&args.common.config, args.common.seed)?,
                    &cancel,
                )
            }
            Command::AnalyticDepth(args) => {
                commands::analytic_depth(args, &load_config(&args.config, args.seed)?)
            }
        }
    };

    match run() {
        Ok(()) => {
            if cancel.load(Ordering::Relaxed) {
                ExitCode::from(130)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Simulation(msg)) => {
            eprintln!("simulation error: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}
