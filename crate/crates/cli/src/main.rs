//! `bubblelab`: runs one experiment, prints its checks, and writes its
//! tables and plot when `--out` is given.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or
//! configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use bubble_core::{run_experiment, Error, ExperimentConfig, ExperimentMode};
use clap::{Args, Parser, Subcommand};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bubblelab",
    version,
    about = "Soap bubble stability experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Perturbed-sphere family: t-sweep, slope fits, CSV and SVG.
    Family(Shared),
    /// Gagliardo-Nirenberg dilation and interpolation checks.
    Gn(Shared),
    /// Stereographic norm transfer ratios.
    Stereo(Shared),
    /// Planar torsion identity, Hopf bounds and rough stability.
    Torsion(Shared),
    /// Stability profile evaluated on a deviation grid.
    Profile(Shared),
}

/// Flags shared by every subcommand. Unset flags keep the value from
/// `--config`, or the default.
#[derive(Debug, Args)]
struct Shared {
    /// `key = value` file applied before the flags below.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    dim_n: Option<usize>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    t_min: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    t_count: Option<usize>,
    /// Cap resolution (family), nodes per axis (stereo) or radial cells (torsion).
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the singular C^{1,alpha} variant of the family.
    #[arg(long)]
    singular: bool,
}

impl Shared {
    fn config(self, mode: ExperimentMode) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.mode = mode;
        if let Some(v) = self.dim_n {
            cfg.dim_n = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if self.t_min.is_some() {
            cfg.t_min = self.t_min;
        }
        if self.t_max.is_some() {
            cfg.t_max = self.t_max;
        }
        if let Some(v) = self.t_count {
            cfg.t_count = v;
        }
        if self.resolution.is_some() {
            cfg.resolution = self.resolution;
        }
        if self.out.is_some() {
            cfg.out_dir = self.out;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        cfg.singular |= self.singular;
        Ok(cfg)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, shared) = match cli.command {
        Command::Family(s) => (ExperimentMode::Family, s),
        Command::Gn(s) => (ExperimentMode::Gn, s),
        Command::Stereo(s) => (ExperimentMode::Stereo, s),
        Command::Torsion(s) => (ExperimentMode::Torsion, s),
        Command::Profile(s) => (ExperimentMode::Profile, s),
    };
    let outcome = shared.config(mode).and_then(|cfg| run_experiment(&cfg));
    match outcome {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for check in &outcome.checks {
                println!("{check}");
            }
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e) => {
            eprintln!("bubblelab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
