//! `bpad`: command-line pipeline for process anomaly detection experiments.
//!
//! ```text
//! bpad generate   # process model + clean train/test logs
//! bpad inject     # anomalous logs + label sidecars
//! bpad train      # fit a detector on the noisy training log
//! bpad score      # per-trace/event/attribute scores, heatmap CSV/SVG
//! bpad evaluate   # macro-F1 per resolution (optional α grid search)
//! bpad sweep      # seeded model × noise × seed experiment grid
//! bpad heatmap    # heatmap of selected traces
//! ```
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 internal error. Log verbosity is controlled by `BPAD_LOG`.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use bpad_core::detectors::DetectorKind;
use clap::{Parser, Subcommand};

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<bpad_core::Error> for CliError {
    fn from(e: bpad_core::Error) -> Self {
        use bpad_core::Error as E;
        let code = match e {
            E::Config(_) => 1,
            E::Training(_) => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "bpad", version, about = "Anomaly detection in business process event logs")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed (overrides `seed` in the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override a configuration field, e.g. `--set train.max_epochs=50`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (overrides `paths.out_dir`).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Detector: dae, tstide, tstide+ or random.
    #[arg(long, global = true, value_parser = parse_detector)]
    detector: Option<DetectorKind>,
    /// Log format: jsonl, csv or xes.
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Build or load a process model and sample clean train and test logs.
    Generate,
    /// Inject anomalies into the train and test logs and write label sidecars.
    Inject,
    /// Fit the selected detector on the injected training log.
    Train,
    /// Score the test log and write reports and heatmaps.
    Score,
    /// Compute macro-F1 metrics on the labeled test log.
    Evaluate,
    /// Run the experiment sweep described in the `sweep` section.
    Sweep,
    /// Render a heatmap for selected test traces.
    Heatmap,
}

fn parse_detector(s: &str) -> Result<DetectorKind, String> {
    s.parse().map_err(|e: bpad_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = cli.out_dir {
        cfg.paths.out_dir = Some(dir);
    }
    if let Some(kind) = cli.detector {
        cfg.detector.kind = kind;
    }
    if let Some(format) = cli.format {
        cfg.format = format;
    }
    cfg.log_format()?;
    let (name, result) = match cli.command {
        Command::Generate => ("generate", commands::generate(&cfg)),
        Command::Inject => ("inject", commands::inject(&cfg)),
        Command::Train => ("train", commands::train(&cfg)),
        Command::Score => ("score", commands::score(&cfg)),
        Command::Evaluate => ("evaluate", commands::evaluate(&cfg)),
        Command::Sweep => ("sweep", commands::sweep(&cfg)),
        Command::Heatmap => ("heatmap", commands::heatmap(&cfg)),
    };
    result?;
    commands::echo_config(&cfg, name)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BPAD_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
        Err(_) => ExitCode::from(3),
    }
}
