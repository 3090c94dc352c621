mod args;
mod commands;
mod output;
mod presets;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;

/// Environment variable holding the worker-thread count.
const THREADS_VAR: &str = "WEDGEGREEN_THREADS";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(1);
                }
            }
            _ => {
                eprintln!("error: {THREADS_VAR} must be a positive integer, got `{v}`");
                return ExitCode::from(1);
            }
        }
    }
    let seed = cli.seed;
    let result = match &cli.command {
        Command::Kernel(a) => commands::kernel(a, seed),
        Command::Lambda(a) => commands::lambda(a, seed),
        Command::Solve(a) => commands::solve_cmd(a, seed),
        Command::Green(a) => commands::green_cmd(a, seed),
        Command::Oblique(a) => commands::oblique(a, seed),
        Command::VerifyBound(a) => commands::verify_bound(a, seed),
        Command::Appendix(a) => commands::appendix(a, seed),
        Command::Sweep(a) => commands::sweep(a, seed),
        Command::Intervals(a) => commands::intervals(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Flagged(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
        Err(e) if e.is_numerical() => {
            eprintln!("numerical failure: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
