//! `telelink` command-line frontend.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Deterministic simulation and inspection tools for the telepresence link.
#[derive(Debug, Parser)]
#[command(
    name = "telelink",
    version,
    about,
    after_help = "Set TELELINK_LOG=error|info|debug for diagnostics."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session and write its metrics CSV.
    Run(RunArgs),
    /// Run one session per link delay and report where force feedback diverges.
    Sweep(SweepArgs),
    /// Decode wire frames, or emit a sample frame.
    Codec(CodecArgs),
    /// Export the spherical-rendering angular error over the image.
    TelevisMap(TelevisMapArgs),
    /// Check a configuration file.
    ValidateConfig(ValidateArgs),
    /// Write a synthetic operator trace.
    GenTrace(GenTraceArgs),
}

#[derive(Debug, Args)]
pub struct SessionInputs {
    /// Session configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Operator trace; defaults to `session.trace` from the config.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Overrides `session.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `session.duration` (s).
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub inputs: SessionInputs,
    /// Metrics CSV destination.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub inputs: SessionInputs,
    /// One-way delays as `start:stop:step` in seconds, or a single value.
    #[arg(long)]
    pub delays: String,
    /// Sweep CSV destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Run the sessions one after another.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct CodecSource {
    /// File holding one or more frames back to back.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// A single frame as hex.
    #[arg(long)]
    pub hex: Option<String>,
    /// Encode a sample message of this kind (eef, hand, head, base, wrench,
    /// currents, arm, video, face, error).
    #[arg(long)]
    pub sample: Option<String>,
}

#[derive(Debug, Args)]
pub struct CodecArgs {
    #[command(flatten)]
    pub source: CodecSource,
    /// With `--sample`, write the frame here instead of printing hex.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TelevisMapArgs {
    /// Camera settings are taken from this config; defaults apply without it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Error map CSV destination.
    #[arg(long)]
    pub out: PathBuf,
    /// Eye offset from the capture pose as `x,y,z` (m).
    #[arg(long, default_value = "0.1,0,0", allow_hyphen_values = true)]
    pub eye: String,
    /// Depth of the scene (m); defaults to `session.scene_depth`.
    #[arg(long)]
    pub depth: Option<f64>,
    #[arg(long, default_value_t = 96)]
    pub cols: usize,
    #[arg(long, default_value_t = 54)]
    pub rows: usize,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenTraceArgs {
    /// hold, reach, circle or locomote.
    #[arg(long)]
    pub kind: String,
    /// Length of the trace (s).
    #[arg(long)]
    pub duration: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Sample period (s).
    #[arg(long, default_value_t = telelink::session::DEFAULT_SAMPLE_PERIOD)]
    pub period: f64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TELELINK_LOG", "warn")).init();
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
