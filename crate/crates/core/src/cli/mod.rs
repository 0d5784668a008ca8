//! The `looplab` command line.
//!
//! Every subcommand writes a `run_manifest.json` into its output directory.
//! Exit codes: 0 success, 1 numerical or other failure, 2 usage or
//! configuration error, 3 data or format error, 4 degenerate evaluator.

pub mod args;
mod commands;
mod manifest;

use std::ffi::OsString;

use clap::Parser;

pub use args::{Cli, Command};
pub use commands::{EvalReport, TrainRunConfig, EXIT_GATE, EXIT_OK, FIG1_CSV, FIG2_CSV, FIG3_CSV};
pub use manifest::{RunManifest, RUN_MANIFEST};

use crate::{Error, Result};
use manifest::ManifestBuilder;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Config(_) => EXIT_USAGE,
        Error::Empty(_) | Error::AllMasked => EXIT_DATA,
        e if e.is_data_error() => EXIT_DATA,
        _ => EXIT_FAILURE,
    }
}

/// Runs a parsed command line and returns its exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    let root = cli.out_root.as_path();
    let config = serde_json::to_value(&cli.command)?;
    let mut m = ManifestBuilder::new(cli.command.name(), config);
    let done = match &cli.command {
        Command::Synth(a) => commands::synth(a, root, &mut m)?,
        Command::Train(a) => commands::train_cmd(a, root, &mut m)?,
        Command::Eval(a) => commands::eval(a, root, &mut m)?,
        Command::Fliptest(a) => commands::fliptest(a, root, &mut m)?,
        Command::Probe(a) => commands::probe(a, root, &mut m)?,
        Command::Shortcut(a) => commands::shortcut(a, root, &mut m)?,
        Command::Figures(a) => commands::figures(a, root, &mut m)?,
        Command::Validate(a) => match commands::validate(a, root, &mut m)? {
            Some(d) => d,
            None => return Ok(EXIT_OK),
        },
    };
    m.write(&done.dir, done.code)?;
    Ok(done.code)
}

/// Parses `args`, runs the command and reports errors on stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
