//! `drk`: synthesize sequences, run odometry, and evaluate trajectories.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "drk", version, about = "Deformable-scene odometry toolkit")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic sequence with exact labels.
    Synth(SynthArgs),
    /// Frame-to-frame odometry over a sequence or palindrome.
    Odom(OdomArgs),
    /// Trajectory metrics.
    Eval {
        #[command(subcommand)]
        metric: EvalMetric,
    },
    /// Build the forward-then-reversed version of a sequence.
    Palindrome(PalindromeArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value = "box")]
    pub scene: String,
    #[arg(long, default_value_t = 0)]
    pub level: u8,
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    /// WxH, at most 640x640.
    #[arg(long, default_value = "128x128")]
    pub res: String,
    /// Overridden by `DRK_SEED`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Do not force the last pose back onto the first.
    #[arg(long)]
    pub open_loop: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OdomArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "oracle")]
    pub flow: String,
    #[arg(long, default_value_t = 12)]
    pub iters: usize,
    #[arg(long, default_value = "identity")]
    pub init: String,
    /// Force a single rigid motion per pair.
    #[arg(long)]
    pub rigid: bool,
    /// Trajectory file; `diagnostics.csv` goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlignArg {
    Se3,
    Sim3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ApteModeArg {
    Loopwise,
    Literal,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long, value_enum, default_value = "se3")]
    pub align: AlignArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum EvalMetric {
    Rpe(EvalArgs),
    Ate(EvalArgs),
    Apte {
        #[command(flatten)]
        common: EvalArgs,
        /// Trajectory estimated over the reversed sequence.
        #[arg(long, required = true)]
        est_back: PathBuf,
        #[arg(long, value_enum, default_value = "loopwise")]
        apte_mode: ApteModeArg,
    },
}

#[derive(Args, Debug)]
pub struct PalindromeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure of a command, mapped onto the exit code contract.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<drk_core::Error> for CliError {
    fn from(e: drk_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn configure_threads(threads: usize) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if threads > 0 {
            builder = builder.num_threads(threads);
        }
        builder
            .build_global()
            .map_err(|e| CliError::Runtime(format!("cannot start thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        log::warn!("built without the parallel feature; --threads {threads} ignored");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = configure_threads(cli.threads).and_then(|()| match cli.command {
        Command::Synth(args) => commands::synth(&args),
        Command::Odom(args) => commands::odom(&args),
        Command::Eval { metric } => commands::eval(&metric),
        Command::Palindrome(args) => commands::palindrome(&args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
