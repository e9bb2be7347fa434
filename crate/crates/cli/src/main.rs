//! `seqtag`: train, apply, and score sequence taggers for wet-lab protocols.

mod commands;
mod config;
mod error;
mod sweep;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "seqtag",
    version,
    about = "Sequence labeling for wet-lab protocol text"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a tagger and write the model plus a per-epoch loss trace
    Train(commands::TrainArgs),
    /// Tag a corpus with a trained model
    Tag(commands::TagArgs),
    /// Score a predicted corpus against gold annotations
    Eval(commands::EvalArgs),
    /// List BIO violations in a tagged corpus
    Validate(commands::ValidateArgs),
    /// Convert BRAT standoff annotations to CoNLL files
    Convert(commands::ConvertArgs),
    /// Grid-search learning rate against weight decay
    Sweep(commands::SweepArgs),
    /// Write a deterministic synthetic training corpus
    GenSynthetic(commands::GenSyntheticArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(args) => commands::train(&args),
        Command::Tag(args) => commands::tag(&args),
        Command::Eval(args) => commands::eval(&args),
        Command::Validate(args) => commands::validate(&args),
        Command::Convert(args) => commands::convert(&args),
        Command::Sweep(args) => commands::sweep(&args),
        Command::GenSynthetic(args) => commands::gen_synthetic(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
