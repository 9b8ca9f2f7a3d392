mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use ctilab::signalgen::RuLayout;

use error::CliError;

/// Synthesize CSI datasets, train the CTI classifier, evaluate it and
/// simulate CTI-aware OFDMA scheduling.
#[derive(Debug, Parser)]
#[command(name = "ctilab", version)]
struct Cli {
    /// Worker threads for data generation, inference and repetitions.
    /// Results do not depend on this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LayoutArg {
    Full242,
    Dual106,
}

impl From<LayoutArg> for RuLayout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Full242 => RuLayout::Full242,
            LayoutArg::Dual106 => RuLayout::Dual106,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate train/val dataset files.
    Gen(GenArgs),
    /// Train the classifier.
    Train(TrainArgs),
    /// Evaluate a model on a dataset.
    Eval(EvalArgs),
    /// Run the scheduling simulation.
    Sim(SimArgs),
    /// Summarize eval and sim outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Dataset manifest (TOML). Without it the desk-scale grid is used.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    ru_layout: Option<LayoutArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Print sample counts without generating anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory holding train.ctid and val.ctid. Without it a desk-scale
    /// dataset is generated in memory.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    ru_layout: Option<LayoutArg>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    /// Test dataset file (.ctid).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Show filtered accuracy on the console (both are always written).
    #[arg(long)]
    filtered: bool,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Scenario file (TOML). Without it the default scenario is used.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// su_only, naive_mu, cti_aware_mu or all.
    #[arg(long, default_value = "all")]
    scheduler: String,
    /// Only run the interference-free baseline.
    #[arg(long)]
    no_cti: bool,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    /// Model file for a model-driven detector (must be a 212-wide model).
    #[arg(long)]
    detector_model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory written by `eval`.
    #[arg(long)]
    eval: PathBuf,
    /// Directory written by `sim`.
    #[arg(long)]
    sim: PathBuf,
    /// Emit JSON instead of markdown.
    #[arg(long)]
    json: bool,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// `CTI_LAB_SEED` wins over both the flag and any config value.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, CliError> {
    let seed = match std::env::var("CTI_LAB_SEED") {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("CTI_LAB_SEED={v:?} is not a u64")))?,
        Err(_) => flag.or(config).unwrap_or(0),
    };
    info!("seed = {seed}");
    Ok(seed)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.into()))?;
    }
    match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sim(a) => commands::sim(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
