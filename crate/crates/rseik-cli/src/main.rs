//! `rseik`: phantom generation, solving, tracing, comparison and timing.
//!
//! Angles on the command line are radians. Exit codes: 0 success, 2 usage or
//! domain errors, 3 numerical failures.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    if let Ok(t) = std::env::var("RSEIK_THREADS") {
        match t.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: RSEIK_THREADS must be a positive integer, got '{t}'");
                return ExitCode::from(2);
            }
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
