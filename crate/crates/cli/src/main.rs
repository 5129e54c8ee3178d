//! `splitctl`: batch front end for the adaptive splitting simulator.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use commands::Outputs;
use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Adaptive run: steps.csv, snapshots, final state and summary.csv.
    Run,
    /// One-step local error sweeps over a list of steps.
    StudyOrder,
    /// Measured and predicted critical steps for KPP.
    StudyDtstar,
    /// Reference solution at the snapshot times.
    Reference,
    /// Leading-error constants and profiles for KPP.
    Theory,
}

impl Command {
    fn stage(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::StudyOrder => "study-order",
            Command::StudyDtstar => "study-dtstar",
            Command::Reference => "reference",
            Command::Theory => "theory",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "splitctl",
    version,
    about = "Adaptive Strang splitting for stiff 1D reaction-diffusion systems"
)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML configuration; every key is optional.
    #[arg(long, required_unless_present = "print_defaults")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, required_unless_present = "print_defaults")]
    out: Option<PathBuf>,
    /// Worker threads for per-point and per-sweep parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,
}

fn execute(cli: &Cli) -> Result<()> {
    if cli.print_defaults {
        print!("{}", RunConfig::defaults_toml());
        return Ok(());
    }
    let (Some(path), Some(dir)) = (&cli.config, &cli.out) else {
        unreachable!("clap enforces --config and --out");
    };
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = RunConfig::load(path).context("configuration")?;
    for w in cfg.validate()? {
        log::warn!("{w}");
    }
    let mut out = Outputs::new(dir)?;
    let result = match cli.command {
        Command::Run => commands::run(&cfg, &mut out),
        Command::StudyOrder => commands::study_order(&cfg, &mut out),
        Command::StudyDtstar => commands::study_dtstar(&cfg, &mut out),
        Command::Reference => commands::reference(&cfg, &mut out),
        Command::Theory => commands::theory(&cfg, &mut out),
    };
    if result.is_err() {
        out.discard();
    }
    result.with_context(|| format!("{} failed", cli.command.stage()))
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("splitctl: {e:#}");
            ExitCode::FAILURE
        }
    }
}
