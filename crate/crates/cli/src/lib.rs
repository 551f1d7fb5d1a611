//! Front end for the `omd` binary.
//!
//! Every command prints a JSON run report on stdout. Exit codes: 0 success,
//! 1 usage or parse error, 2 violated precondition, 3 failed verification.

pub mod args;
pub mod commands;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::commands::{Failure, Outcome};
use crate::report::{RunReport, Timing};

fn dispatch(command: &Command) -> Result<Outcome, Failure> {
    match command {
        Command::Solve(a) => commands::solve(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::Examples(_) => commands::examples(),
        Command::Sample(a) => commands::sample(a),
        Command::Budgeted(a) => commands::budgeted(a),
        Command::Verify(a) => commands::verify(a),
    }
}

/// Runs one command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let start = Instant::now();
    let outcome = match dispatch(&cli.command) {
        Ok(outcome) => outcome,
        Err(failure) => {
            eprintln!("omd: {failure}");
            return failure.exit_code();
        }
    };
    let report = RunReport {
        command: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
        inputs: outcome.inputs,
        outputs: outcome.outputs,
        verification: outcome.verification,
        timing: Timing { elapsed_ms: start.elapsed().as_secs_f64() * 1e3 },
    };
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    // a closed stdout (e.g. piped into `head`) is not an error of the run
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(path) = &cli.command.common().json_out {
        if let Err(failure) = commands::write_file(path, &text) {
            eprintln!("omd: {failure}");
            return failure.exit_code();
        }
    }
    match outcome.failure {
        Some(failure) => {
            eprintln!("omd: {failure}");
            failure.exit_code()
        }
        None => 0,
    }
}
