//! Command-line frontend for `sqzlab`.
//!
//! Exit codes: 0 on success, 1 for invalid input or usage, 2 when a valid
//! problem has no numerical solution (infeasible target, singular fit,
//! unstable cavity, non-converged fit).

mod args;
mod commands;
mod config;
mod format;
mod svg;

use std::ffi::OsString;
use std::io::{self, Write};

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(sqzlab::Error),
    /// Valid input without a numerical answer.
    Numerical(String),
    Output(io::Error),
}

impl From<sqzlab::Error> for CliError {
    fn from(e: sqzlab::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Output(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output(e) => write!(f, "output: {e}"),
        }
    }
}

/// Runs the CLI on `argv` (program name first) against the process's
/// standard streams and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_cli_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    0
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    1
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a, out),
        Command::Fit(a) => commands::fit(a, out),
        Command::Buildup(a) => commands::buildup(a, out),
        Command::Budget(a) => commands::budget(a, out),
        Command::Design(a) => commands::design(a, out),
        Command::Simulate(a) => commands::simulate(a, out),
        Command::Coresonance(a) => commands::coresonance(a, out),
        Command::Plot(a) => commands::plot(a, out),
    };
    match result {
        Ok(()) => 0,
        // A closed reader (`| head`) is not a failure.
        Err(CliError::Output(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
