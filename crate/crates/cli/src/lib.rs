//! The `diffusemix` command line.
//!
//! Every subcommand is a plain function over its parsed arguments and a pair
//! of output streams, so the binary in `main.rs` only parses, dispatches and
//! maps the result to a process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | runtime failure (I/O, decode, backend, per-image failures) |
//! | 2 | usage or configuration error |

pub mod args;
pub mod commands;
pub mod config;

use std::fmt;

use diffusemix_core::Error;

pub use args::{Cli, Command};
pub use commands::overhead::{compute_overhead, OverheadError};

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Environment variable supplying the default `--cache-dir`.
pub const CACHE_ENV: &str = "DIFFUSEMIX_CACHE";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config file or inputs that fail validation up front.
    Usage(String),
    /// Anything that went wrong while doing the work.
    Runtime(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_FAILURE,
        }
    }

    /// Like `From<Error>` but prefixes the message with the flag it came from.
    pub fn for_flag(flag: &str, err: Error) -> Self {
        let wrapped = CliError::from(err);
        match wrapped {
            CliError::Usage(m) => CliError::Usage(format!("{flag}: {m}")),
            CliError::Runtime(m) => CliError::Runtime(format!("{flag}: {m}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::Config(_)
            | Error::LambdaOutOfRange(_)
            | Error::UnknownPrompt(_)
            | Error::InvalidPromptLibrary(_)
            | Error::EmptyFractalSet(_)
            | Error::EmptyDataset(_)
            | Error::Manifest { .. } => CliError::Usage(err.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> u8 {
    let result = match &cli.command {
        Command::Augment(a) => commands::augment::run(a, out, err),
        Command::Fractals(a) => commands::fractals::run(a, out),
        Command::Preview(a) => commands::preview::run(a, out),
        Command::Overhead(a) => commands::overhead::run(a, out),
        Command::Validate(a) => commands::validate::run(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
