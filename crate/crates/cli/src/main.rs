//! Command-line driver for graph framelet experiments.
//!
//! Exit codes: 0 on success, 1 when an asserted bound or determinism check
//! fails, 2 on input errors (bad flags, malformed files, unusable modes).

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fmp_cli::commands;
use fmp_cli::common::CliError;

#[derive(Parser)]
#[command(
    name = "fmp",
    version,
    about = "Multiscale graph framelet transforms and framelet message passing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic two-class graph file set.
    GenSbm(commands::gen_sbm::Args),
    /// Frame bounds, reconstruction residual, and tightness deficit.
    TightnessReport(commands::tightness::Args),
    /// Perturbation growth of stacked layers against the Lipschitz envelope.
    StabilityProbe(commands::stability::Args),
    /// Trace-bound energy sandwich over random trials.
    EnergySandwich(commands::sandwich::Args),
    /// Per-layer Dirichlet energy of a deep GCN versus the continuous model.
    EnergyEvolution(commands::evolution::Args),
    /// Train node classifiers over repeated seeds and report accuracy.
    NodeClassify(commands::classify::Args),
    /// Seeded random search over the hyperparameter space.
    Sweep(commands::sweep::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenSbm(args) => commands::gen_sbm::run(args),
        Command::TightnessReport(args) => commands::tightness::run(args),
        Command::StabilityProbe(args) => commands::stability::run(args),
        Command::EnergySandwich(args) => commands::sandwich::run(args),
        Command::EnergyEvolution(args) => commands::evolution::run(args),
        Command::NodeClassify(args) => commands::classify::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Assertion(message)) => {
            eprintln!("assertion failure: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Input(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
