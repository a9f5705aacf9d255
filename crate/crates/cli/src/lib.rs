//! `qpd-sim`: seeded, reproducible runs of the charge-parity detection
//! simulations. Every run writes its CSVs, a `report.json` and the resolved
//! `config.toml` (seed included) into the output directory.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
mod error;

pub use commands::Calibration;
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qpd-sim", version, about = "Charge-parity detection simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML run configuration; defaults to the `paper-device` profile.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides `seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, default_value = "qpd-out")]
    pub out: PathBuf,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// EchoCPM mapping fidelity for both parities.
    MappingSim,
    /// Reference randomized benchmarking.
    Rb,
    /// Reference plus interleaved benchmarking of the configured gates.
    Irb,
    /// Ideal and measured parity traces.
    Trace,
    /// Welch PSD and Lorentzian fit of a trace.
    Psd {
        /// Trace file (CSV or binary); a fresh trace is generated otherwise.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Calibration experiments.
    Calibrate {
        #[arg(long, value_enum)]
        which: Calibration,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::MappingSim => "mapping-sim",
            Command::Rb => "rb",
            Command::Irb => "irb",
            Command::Trace => "trace",
            Command::Psd { .. } => "psd",
            Command::Calibrate { .. } => "calibrate",
        }
    }
}

/// Loads and validates the configuration, runs the subcommand and writes
/// the outputs. Returns a one-line summary.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let resolved = cfg.resolve()?;
    if cli.threads == Some(0) {
        return Err(CliError::Config("--threads: must be positive".into()));
    }

    let mut out = commands::Output::create(&cli.out)?;
    out.write("config.toml", cfg.to_toml())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    let report = pool.install(|| match &cli.command {
        Command::MappingSim => commands::mapping_sim(&cfg, &resolved, &mut out),
        Command::Rb => commands::rb(&cfg, &resolved, &mut out),
        Command::Irb => commands::irb(&cfg, &resolved, &mut out),
        Command::Trace => commands::trace(&cfg, &resolved, &mut out),
        Command::Psd { trace } => commands::psd(&cfg, &resolved, trace.as_deref(), &mut out),
        Command::Calibrate { which } => commands::calibrate(&cfg, &resolved, *which, &mut out),
    })?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    out.write("report.json", json + "\n")?;
    Ok(format!("{} done: {}", cli.command.name(), cli.out.join("report.json").display()))
}
