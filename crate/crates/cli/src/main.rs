//! `spectral-da`: batch front end for well-posedness checks, normalization
//! constants, assimilation, adversarial data and Monte Carlo sweeps.

mod commands;
mod error;
mod format;
mod problem;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spectral_da_core::SeriesConfig;

use commands::RunParams;
use error::CliError;
use problem::ProblemFile;

const TAIL_CUTOFF_VAR: &str = "SPECTRAL_DA_TAIL_CUTOFF";

#[derive(Parser)]
#[command(name = "spectral-da", version, about = "Well-posedness of diagonal Gaussian data assimilation")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Well-posedness report (JSON).
    Classify { problem: PathBuf },
    /// Log normalization constant, certified or truncated to N modes (JSON).
    Constant {
        problem: PathBuf,
        #[arg(long)]
        truncate: Option<u64>,
    },
    /// Per-mode posterior mean, variance and gain (CSV).
    Assimilate {
        problem: PathBuf,
        /// Comma-separated modes; `--modes=` selects none.
        #[arg(long)]
        modes: Option<String>,
    },
    /// Data within `delta` of the problem's data with zero normalization constant (JSON).
    Adversarial {
        problem: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Monte Carlo estimate of the truncated log constant (JSON).
    Mc {
        problem: PathBuf,
        #[arg(long)]
        truncate: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Effective sample size across truncation dimensions (CSV).
    Sweep {
        problem: PathBuf,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<u64>>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn series_config() -> Result<SeriesConfig, CliError> {
    match std::env::var(TAIL_CUTOFF_VAR) {
        Err(_) => Ok(SeriesConfig::default()),
        Ok(v) => match v.trim().parse::<u64>() {
            Ok(n) if n >= 1 => Ok(SeriesConfig { tail_cutoff: n }),
            _ => Err(CliError::Input(format!("{TAIL_CUTOFF_VAR} must be a positive integer, got {v:?}"))),
        },
    }
}

fn parse_modes(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| CliError::Input(format!("invalid mode {t:?}"))))
        .collect()
}

fn run(cli: Cli) -> Result<String, CliError> {
    let cfg = series_config()?;
    match cli.command {
        Command::Classify { problem } => commands::classify(&ProblemFile::read(&problem)?, &cfg),
        Command::Constant { problem, truncate } => commands::constant(&ProblemFile::read(&problem)?, truncate, &cfg),
        Command::Assimilate { problem, modes } => {
            let modes = modes.as_deref().map(parse_modes).transpose()?;
            commands::assimilate(&ProblemFile::read(&problem)?, modes, &cfg)
        }
        Command::Adversarial { problem, delta } => commands::adversarial(&ProblemFile::read(&problem)?, delta, &cfg),
        Command::Mc { problem, truncate, n, seed } => {
            commands::mc(&ProblemFile::read(&problem)?, RunParams { truncate, samples: n, seed, dims: None })
        }
        Command::Sweep { problem, dims, n, seed } => {
            commands::sweep(&ProblemFile::read(&problem)?, RunParams { truncate: None, samples: n, seed, dims })
        }
    }
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let output = cli.output.clone();
    match run(cli).and_then(|text| emit(&text, output.as_ref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spectral-da: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
