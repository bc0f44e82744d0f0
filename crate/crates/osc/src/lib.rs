//! Front end for `osc-core`: input formats, JSON reports and the `osc` command.

pub mod cli;
pub mod commands;
pub mod input;
pub mod report;

use std::fs;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::json;

pub use commands::{CliError, Output};
pub use report::Report;

/// Environment variable holding the default float tolerance.
pub const TOLERANCE_ENV: &str = "OSC_FLOAT_TOL";
pub const DEFAULT_FLOAT_TOL: f64 = osc_core::algebra::CAUSAL_TOL;

/// Result of one invocation: what goes to stdout and stderr, and the exit status.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn failure(err: &CliError) -> Outcome {
    let mut stderr = serde_json::to_string_pretty(&err.to_json()).unwrap_or_default();
    stderr.push('\n');
    Outcome { code: err.exit_code(), stdout: String::new(), stderr }
}

fn float_tolerance(env: Option<String>) -> Result<f64, CliError> {
    match env {
        None => Ok(DEFAULT_FLOAT_TOL),
        Some(s) => match s.trim().parse::<f64>() {
            Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
            _ => Err(input::InputError::new(format!("${TOLERANCE_ENV}"), format!("'{s}' is not a positive number")).into()),
        },
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, tolerance_env: Option<String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match cli::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { code: 0, stdout: e.to_string(), stderr: String::new() }
                }
                _ => {
                    let body = json!({ "error": { "kind": "validation", "pointer": "argv", "message": e.to_string() } });
                    let mut stderr = serde_json::to_string_pretty(&body).unwrap_or_default();
                    stderr.push('\n');
                    Outcome { code: 2, stdout: String::new(), stderr }
                }
            };
        }
    };
    let tol = match float_tolerance(tolerance_env) {
        Ok(t) => t,
        Err(e) => return failure(&e),
    };
    let (text, code) = match commands::dispatch(&cli, tol) {
        Ok(Output::Csv(csv)) => (csv, 0),
        Ok(Output::Report(r)) => (r.render(), if r.verification_failed { 3 } else { 0 }),
        Err(e) => return failure(&e),
    };
    match &cli.output {
        Some(path) => match fs::write(path, &text) {
            Ok(()) => Outcome { code, stdout: String::new(), stderr: String::new() },
            Err(e) => failure(&input::InputError::new("--output", format!("cannot write '{path}': {e}")).into()),
        },
        None => Outcome { code, stdout: text, stderr: String::new() },
    }
}
