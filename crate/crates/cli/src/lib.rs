//! Command-line front end of the document aligner.
//!
//! Every subcommand reads and writes explicit paths. `run` chains the stages
//! from one configuration file, skipping stages whose stamped inputs and
//! outputs are unchanged, and records a manifest of parameters and digests.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 for data
//! errors.

pub mod commands;
pub mod config;
pub mod pipeline;
pub mod stages;
pub mod stamp;

use std::ffi::OsString;

use clap::Parser;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Invalid invocation detected after argument parsing.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Exit code for an error: the first classified cause in the chain decides.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<docalign_core::Error>() {
            return if e.is_usage() { EXIT_USAGE } else { EXIT_DATA };
        }
    }
    EXIT_DATA
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    if let Some(n) = cli.workers {
        if n == 0 {
            eprintln!("error: the worker count must be positive");
            return EXIT_USAGE;
        }
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("worker pool already initialized; ignoring --workers {n}");
        }
    }
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_error_class() {
        let usage: anyhow::Error = docalign_core::Error::Config("x".into()).into();
        assert_eq!(exit_code(&usage.context("wrapped")), EXIT_USAGE);
        let data: anyhow::Error = docalign_core::Error::Schema("x".into()).into();
        assert_eq!(exit_code(&data), EXIT_DATA);
        assert_eq!(exit_code(&UsageError("x".into()).into()), EXIT_USAGE);
        assert_eq!(exit_code(&anyhow::anyhow!("io")), EXIT_DATA);
    }

    #[test]
    fn bad_arguments_are_usage_errors() {
        assert_eq!(main_with_args(["docalign", "no-such-command"]), EXIT_USAGE);
        assert_eq!(main_with_args(["docalign", "align-cda", "--vectors"]), EXIT_USAGE);
        assert_eq!(main_with_args(["docalign", "--version"]), EXIT_OK);
    }
}
