use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use thermistor_sim::runner::{run, Mode, RunManifest};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CliMode {
    Simulate,
    VerifyPotential,
    VerifyHeat,
    IvCurve,
    EpsStudy,
    PropertySuite,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Simulate => Mode::Simulate,
            CliMode::VerifyPotential => Mode::VerifyPotential,
            CliMode::VerifyHeat => Mode::VerifyHeat,
            CliMode::IvCurve => Mode::IvCurve,
            CliMode::EpsStudy => Mode::EpsStudy,
            CliMode::PropertySuite => Mode::PropertySuite,
        }
    }
}

/// Coupled thermistor simulator: quasi-static potential equation with a
/// p-structured conductivity, two-way coupled to a nonlinear heat
/// equation with Joule self-heating.
#[derive(Debug, Parser)]
#[command(name = "thermistor-sim", version)]
struct Cli {
    /// What to run.
    #[arg(value_enum)]
    mode: CliMode,
    /// Path to the TOML problem description.
    #[arg(long)]
    config: PathBuf,
    /// Directory for summary.txt and any mode-specific artifacts.
    #[arg(long)]
    out: PathBuf,
    /// RNG seed for the sampled property suite.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Snapshot cadence in time steps for simulate mode.
    #[arg(long, default_value_t = 10)]
    stride: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut manifest = RunManifest::new(cli.mode.into(), cli.config, cli.out);
    manifest.seed = cli.seed;
    manifest.stride = cli.stride;
    match run(&manifest) {
        Ok(summary) => {
            for check in &summary.checks {
                let tag = if check.passed { "PASS" } else { "FAIL" };
                println!("{tag} {}: {}", check.name, check.detail);
            }
            println!("summary written to {}", summary.summary_path.display());
            if summary.all_passed {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
