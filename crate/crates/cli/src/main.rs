//! Command-line front end: ingestion, training, extraction, evaluation,
//! identity verification, and scripted ablations.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use s2df_core::error::Error;

#[derive(Parser, Debug)]
#[command(
    name = "s2df",
    about = "Learn scaled-squared distance fields from unoriented point clouds",
    version
)]
struct Cli {
    /// Worker threads for parallel sections (0 = auto); also via S2DF_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit the field to a point cloud and write checkpoints.
    Train(commands::train::TrainArgs),
    /// Contour a trained field at an offset level.
    Extract(commands::extract::ExtractArgs),
    /// Score a reconstruction against ground truth.
    Eval(commands::eval::EvalArgs),
    /// Run the analytic identity batteries on closed-form fields.
    Verify(commands::verify::VerifyArgs),
    /// Train a matrix of K values and loss combinations.
    Ablate(commands::ablate::AblateArgs),
}

/// Exit codes: 0 success, 2 unusable input or config, 3 numerical failure,
/// 4 empty result.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NumericalFailure { .. } | Error::NonDifferentiable(_) => 3,
        Error::EmptyResult(_) => 4,
        _ => 2,
    }
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    if let Some(n) = flag {
        return Some(n);
    }
    std::env::var("S2DF_THREADS")
        .ok()
        .and_then(|raw| raw.parse().ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = thread_count(cli.threads) {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("warning: thread pool already initialized: {e}");
            }
        }
    }
    let outcome = match &cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::Extract(args) => commands::extract::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Verify(args) => {
            return match commands::verify::run(args) {
                Ok(0) => ExitCode::SUCCESS,
                Ok(code) => ExitCode::from(code as u8),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code_for(&e))
                }
            }
        }
        Command::Ablate(args) => commands::ablate::run(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
