//! `detext`: corpus building, rephrase generation, training, evaluation and
//! scoring from one binary.

mod args;
mod commands;
mod config;
mod error;
mod provenance;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use crate::args::{Cli, Command};
use crate::error::CliError;
use crate::provenance::Provenance;

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let argv = config::inject(argv)?;
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let _ = e.print();
            return Err(CliError::Reported);
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;

    env_logger::Builder::new()
        .filter_level(cli.log_level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init()
        .ok();

    let threads = cli.threads.map(usize::from);
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot configure {n} threads: {e}")))?;
    }

    let (name, sub) = matches.subcommand().expect("clap requires a subcommand");
    let mut prov = Provenance::new(name, &matches, sub);
    match &cli.command {
        Command::BuildCorpus(a) => commands::build_corpus(a, &mut prov),
        Command::Rephrase(a) => commands::rephrase(a, threads, &mut prov),
        Command::Train(a) => commands::train(a, &mut prov),
        Command::Evaluate(a) => commands::evaluate(a, &mut prov),
        Command::Score(a) => commands::score(a, &mut prov),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Reported) => ExitCode::from(1),
        Err(e) => {
            eprintln!("detext: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
