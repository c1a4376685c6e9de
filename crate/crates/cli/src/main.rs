//! `emoji-combo` — emoji combination prediction pipeline.

mod commands;
mod config;
mod serve;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "emoji-combo",
    version,
    about = "Predict the emoji combination that follows a short text",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error."
)]
struct Cli {
    /// TOML config file supplying defaults; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the emoji vocabulary and (context, target) dataset from a corpus.
    BuildDataset(commands::BuildDatasetArgs),
    /// Mine the candidate combination dictionary from a dataset.
    MineCandidates(commands::MineCandidatesArgs),
    /// Train the bag-of-words probability model.
    Train(commands::TrainArgs),
    /// Predict combinations for a dataset of contexts.
    Predict(commands::PredictArgs),
    /// Compare strategies on a test dataset and write the report CSV.
    Evaluate(commands::EvaluateArgs),
    /// Answer prediction requests over stdin/stdout or TCP.
    Serve(commands::ServeArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => config::EXIT_USAGE,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let result = FileConfig::load(cli.config.as_deref()).and_then(|file| match cli.command {
        Command::BuildDataset(args) => commands::build_dataset(args, &file),
        Command::MineCandidates(args) => commands::mine(args, &file),
        Command::Train(args) => commands::train(args, &file),
        Command::Predict(args) => commands::predict(args, &file),
        Command::Evaluate(args) => commands::evaluate(args, &file),
        Command::Serve(args) => commands::serve(args, &file),
    });

    if let Err(failure) = result {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}
