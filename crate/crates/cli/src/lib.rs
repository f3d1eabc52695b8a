//! Batch harness for the `morphomod` toolkit.
//!
//! Exit codes: 0 success, 1 usage error, 2 some images failed, 3 fatal error.

pub mod config;
pub mod disorient;
pub mod remove;
pub mod report;
pub mod synth;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::FileConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;
pub const EXIT_FATAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "morphomod", version, about = "Blind visible-watermark removal toolkit")]
pub struct Cli {
    #[arg(long, global = true, value_name = "FILE", help = "TOML file with default settings")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, help = "Worker threads [default: all cores]")]
    pub jobs: Option<usize>,
    #[arg(long, global = true, help = "Master seed")]
    pub seed: Option<u64>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count, help = "More log output")]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset
    Synth(synth::SynthArgs),
    /// Remove watermarks from a dataset and score the result
    Remove(remove::RemoveArgs),
    /// Run removal for several dilation radii
    Sweep(remove::SweepArgs),
    /// Run the box-relocation experiment on a disorient dataset
    Disorient(disorient::DisorientArgs),
    /// Score existing restored images
    Eval(remove::EvalArgs),
}

/// Bad flags or settings; maps to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    /// Images or samples that failed while the batch carried on.
    pub failures: usize,
}

pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let jobs = cli.jobs.or(file.jobs).unwrap_or(0);
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let pool = remove::thread_pool(jobs)?;
    match &cli.command {
        Command::Synth(a) => pool.install(|| synth::cmd_synth(a, seed)).map(|(_, o)| o),
        Command::Remove(a) => remove::cmd_remove(a, &file, &pool),
        Command::Sweep(a) => remove::cmd_sweep(a, &file, &pool),
        Command::Disorient(a) => disorient::cmd_disorient(a, &file, seed, &pool).map(|(_, o)| o),
        Command::Eval(a) => remove::cmd_eval(a, &pool),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(o) if o.failures > 0 => {
            eprintln!("warning: {} item(s) failed", o.failures);
            EXIT_PARTIAL
        }
        Ok(_) => EXIT_OK,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_FATAL
        }
    }
}
