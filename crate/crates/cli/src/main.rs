//! `uco`: one binary wiring the full pipeline, generate -> curate -> train ->
//! evaluate -> ablate -> report.
//!
//! Exit codes: 0 success, 1 validation error (bad flags or bad input data),
//! 2 runtime error (I/O or numeric failure).

use clap::error::ErrorKind;
use clap::Parser;

mod commands;
mod manifest;

use commands::{AblateArgs, CurateArgs, EvalArgs, GenArgs, ReportArgs, TrainArgs};

#[derive(Debug, Parser)]
#[command(name = "uco", version, about = "Centrality-optimized product search pipeline")]
enum Cli {
    /// Generate a synthetic labeled pairs file
    Gen(GenArgs),
    /// Build evaluation splits and correlation stats from a pairs file
    Curate(CurateArgs),
    /// Fine-tune an embedding model on graded pairs
    Train(TrainArgs),
    /// Rank a split's corpus per query with a trained model and score it
    Eval(EvalArgs),
    /// Compare the ranking loss, the contrastive loss, and their sum
    Ablate(AblateArgs),
    /// Summarize before/after evaluation reports per split
    Report(ReportArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let result = match cli {
        Cli::Gen(args) => commands::run_gen(&args),
        Cli::Curate(args) => commands::run_curate(&args),
        Cli::Train(args) => commands::run_train(&args),
        Cli::Eval(args) => commands::run_eval(&args),
        Cli::Ablate(args) => commands::run_ablate(&args),
        Cli::Report(args) => commands::run_report(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(if err.is_validation() { 1 } else { 2 });
    }
}
