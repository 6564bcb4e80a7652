//! `skillgap`: domain gaps between feature datasets and few-shot skill
//! evaluation from the command line.
//!
//! Exit codes: 0 success, 1 failed self-test, 2 configuration error,
//! 3 data error, 4 solver failure.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{eval, gains, gap, selftest, synth};

#[derive(Debug, Parser)]
#[command(name = "skillgap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    Gap(gap::GapArgs),
    Eval(eval::EvalArgs),
    Gains(gains::GainsArgs),
    Selftest(selftest::SelftestArgs),
    Synth(synth::SynthArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gap(a) => gap::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Gains(a) => gains::run(a),
        Command::Selftest(a) => selftest::run(a),
        Command::Synth(a) => synth::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
