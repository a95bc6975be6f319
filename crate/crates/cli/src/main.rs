//! `taboo`: closed-form limits, tail constants, time-domain curves and
//! Monte Carlo checks for taboo-hitting times of lattice random walks.

mod args;
mod commands;
mod failure;
mod manifest;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::Failure;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match run(argv) {
        Ok(code) => code,
        Err(f) => {
            output::print_out(&(output::to_json(&f.to_record()) + "\n"));
            ExitCode::from(f.exit_code())
        }
    }
}

fn run(argv: Vec<String>) -> Result<ExitCode, Failure> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            output::print_out(&e.to_string());
            return Ok(ExitCode::SUCCESS);
        }
        Err(e) => return Err(Failure::usage(e.to_string())),
    };
    configure_threads(cli.threads)?;
    let args = argv[1..].to_vec();
    match cli.command {
        Command::Limit(a) => commands::limit(&a, args),
        Command::Tail(a) => commands::tail(&a, args),
        Command::Curve(a) => commands::curve(&a, args),
        Command::Simulate(a) => commands::simulate(&a, args),
        Command::Verify(a) => verify::run(&a, args),
        Command::Replay(a) => {
            let replay = manifest::replay_args(&a.manifest)?;
            let mut next = vec![argv[0].clone()];
            next.extend(replay);
            run(next)
        }
    }
}

fn configure_threads(threads: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::usage("thread count must be at least 1".into()));
        }
        // a pool may already exist when a manifest is replayed
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
