//! `lowtrack` — synthetic low-fps tracking scenarios, three tracker
//! variants, evaluation, and head training behind one reproducible CLI.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error. Progress goes to
//! stderr; data goes to files and stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

mod commands;
mod config;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

#[derive(Parser)]
#[command(name = "lowtrack", version, about = "Low-frame-rate multi-object tracking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario into a sequence directory
    Synth {
        /// Output sequence directory
        #[arg(long)]
        out: PathBuf,
        /// Scenario config file (key=value)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario preset (noiseless-v1 | jumpcut-v1 | benchmark-v1 | twins-v1)
        #[arg(long)]
        preset: Option<String>,
        /// Generator seed (overrides config)
        #[arg(long)]
        seed: Option<u64>,
        /// Decimate the generated sequence by this stride before writing
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Run a tracker over a sequence directory
    Track {
        /// Input sequence directory
        #[arg(long)]
        seq: PathBuf,
        /// Output results file
        #[arg(long)]
        out: PathBuf,
        /// Tracker config file (key=value)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tracker variant (embed | sort | byte), overrides config
        #[arg(long)]
        variant: Option<String>,
        /// Decimate by this stride before tracking (also sets dt)
        #[arg(long)]
        stride: Option<usize>,
        /// Project raw features through this trained head file
        #[arg(long)]
        head: Option<PathBuf>,
    },
    /// Evaluate a results file against ground truth
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        results: PathBuf,
        /// Write the machine-readable report here
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to one class code (1 | 2 | 3)
        #[arg(long = "class-filter")]
        class_filter: Option<i32>,
        /// IoU threshold for CLEAR/IDF1 true positives
        #[arg(long = "iou-min")]
        iou_min: Option<f64>,
    },
    /// Train an embedding projection head on single-frame features
    Train {
        /// Output head file
        #[arg(long)]
        out: PathBuf,
        /// Training config file (key=value)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the per-epoch loss curve CSV here
        #[arg(long)]
        curve: Option<PathBuf>,
        /// Training seed (overrides config)
        #[arg(long)]
        seed: Option<u64>,
        /// Head output dimension (overrides config)
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Run a sweep (stride x variant, or head dimension) and tabulate
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for results, reports, and the table
        #[arg(long)]
        out: PathBuf,
        /// Scenario seed (overrides config)
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { out, config, preset, seed, stride } => {
            commands::synth(&out, config.as_deref(), preset.as_deref(), seed, stride)
        }
        Command::Track { seq, out, config, variant, stride, head } => {
            let variant = variant
                .map(|v| v.parse().map_err(CliError::Usage))
                .transpose()?;
            commands::track(&seq, &out, config.as_deref(), variant, stride, head.as_deref())
        }
        Command::Eval { gt, results, out, class_filter, iou_min } => {
            commands::eval(&gt, &results, out.as_deref(), class_filter, iou_min)
        }
        Command::Train { out, config, curve, seed, dim } => {
            commands::train(&out, config.as_deref(), curve.as_deref(), seed, dim)
        }
        Command::Experiment { config, out, seed } => commands::experiment(&config, &out, seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
