//! `bresse`: command-line front end of the Bresse beam stability lab.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use bresse_core::BresseError;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bresse", version, about = "Stability experiments for damped Bresse beams")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "BRESSE_THREADS")]
    pub threads: Option<usize>,
    /// Seed for random initial data; overrides the scenario.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Number of elements; overrides the scenario.
    #[arg(long, global = true)]
    pub elements: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SpacingArg {
    Log,
    Linear,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate in time and fit the energy decay.
    Simulate {
        #[arg(long)]
        tmax: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        /// Record every k-th step.
        #[arg(long)]
        every: Option<usize>,
    },
    /// Resolvent norms along the imaginary axis and the implied class.
    Sweep {
        #[arg(long)]
        lmin: Option<f64>,
        #[arg(long)]
        lmax: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, value_enum)]
        spacing: Option<SpacingArg>,
        /// Peak-resolved local supremum instead of plain grid values.
        #[arg(long)]
        envelope: bool,
    },
    /// Eigenvalues of the discrete generator and imaginary-axis clearance.
    Spectrum {
        /// Also write M, K, C and G in MatrixMarket format.
        #[arg(long)]
        dump: bool,
    },
    /// Closed-form witness sequence and its growth exponents.
    Witness {
        /// Comma-separated mode indices.
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<u32>>,
        /// Compare with resolvent norms at λ_n on the scenario mesh.
        #[arg(long)]
        cross_check: bool,
    },
    /// Classify an existing sweep CSV or fit an existing trace CSV.
    Classify {
        #[arg(long)]
        input: PathBuf,
        /// Trailing fraction of a trace used by the fit.
        #[arg(long, default_value_t = 0.6)]
        window: f64,
    },
    /// Reproduce the regime table from the canonical fixtures.
    Table,
    /// Collect the reports found in an output directory into report.md.
    Report,
}

/// Exit code for a failed run: 2 for usage and configuration errors, 1 for
/// numerical failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<BresseError>() {
        Some(
            BresseError::InvalidScenario(_)
            | BresseError::ScenarioFile(_)
            | BresseError::AboveResolvedCap { .. }
            | BresseError::InvalidArgument(_)
            | BresseError::Unsupported(_)
            | BresseError::InsufficientData(_),
        ) => 2,
        Some(_) => 1,
        None if err.downcast_ref::<commands::UsageError>().is_some() => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
