mod args;
mod commands;
mod error;
mod manifest;
mod vectors;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Context;
use error::CliError;

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let ctx = Context::load(cli.config, cli.out_dir)?;
    match cli.command {
        Command::BuildIndex(a) => commands::build_index(&ctx, a),
        Command::MakeSuite(a) => commands::make_suite(&ctx, a),
        Command::Run(a) => commands::run(&ctx, a),
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::BenchScalability(a) => commands::bench_scalability(&ctx, a),
        Command::Ablation(a) => commands::ablation(&ctx, a),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
