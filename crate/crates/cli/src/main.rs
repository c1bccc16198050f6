//! `gamchain`: batch front end for fitting, simulating, validating and timing
//! the gamma-chain and lognormal-chain volatility estimators.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 non-convergence or a
//! numerical breakdown.

mod commands;
mod settings;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files.
    Usage(String),
    /// The computation ran but did not converge or broke down numerically.
    Convergence(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Convergence(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Convergence(m) => f.write_str(m),
        }
    }
}

impl From<gamchain::Error> for CliError {
    fn from(e: gamchain::Error) -> Self {
        match e {
            gamchain::Error::Numerical(_) => CliError::Convergence(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gamchain", version, about = "Gamma-chain stochastic volatility estimation")]
pub struct Cli {
    /// Flat key = value file supplying defaults for flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (falls back to $GAMCHAIN_REPORT_DIR, then `.`).
    #[arg(long, global = true)]
    pub report_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one engine to one or more return series.
    Fit(FitArgs),
    /// Simulate a synthetic series with its latent path.
    Simulate(SimulateArgs),
    /// KS test of posterior-normalised residuals from an earlier fit.
    Residuals(ResidualArgs),
    /// Summary statistics (std and kurtosis of r and of Δln r²).
    Stats(StatsArgs),
    /// Increment variance and kurtosis over a grid of A.
    Moments(MomentsArgs),
    /// Fixed-iteration wall-clock comparison of the engines.
    Bench(BenchArgs),
    /// Per-call cost of the elementary functions the engines use.
    Timing(TimingArgs),
    /// Numerical checks of the model's closed-form identities.
    Derivations(DerivationArgs),
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// CSV with `timestamp,close,volume` or `timestamp,return` columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Instrument label; defaults to the file stem.
    #[arg(long)]
    pub instrument: Option<String>,
    #[arg(long, default_value = "")]
    pub period: String,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV; repeat the flag to fit several series in parallel.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "")]
    pub period: String,
    /// c1, c2, c3 or c4.
    #[arg(long)]
    pub engine: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub particles: Option<usize>,
    /// Backward trajectories per E-step (defaults to the particle count).
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    /// Relative change of the parameter that ends the EM loop.
    #[arg(long)]
    pub tol_a: Option<f64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// C3 only: keep a dummy node after the last observation.
    #[arg(long)]
    pub paper_literal: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `gam` or `logn`.
    #[arg(long, default_value = "gam")]
    pub model: String,
    /// Shape A of the gamma chain.
    #[arg(long)]
    pub a: Option<f64>,
    /// Step variance S² of the lognormal chain.
    #[arg(long)]
    pub s2: Option<f64>,
    /// Series length.
    #[arg(long)]
    pub t: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial precision.
    #[arg(long, default_value_t = 1.0)]
    pub u0: f64,
    /// Output CSV; the JSON sidecar goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResidualArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
    /// c1..c4 (reads that fit's posterior), `raw`, or `exact` (reads the simulation sidecar).
    #[arg(long)]
    pub engine: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Simulation sidecar for `--engine exact`; defaults to the input with a `.json` extension.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub series: SeriesArgs,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    /// `lo:hi:n`, evenly spaced.
    #[arg(long, default_value = "0.1:10:50")]
    pub a_grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Input CSV; without it a gamma-chain series (A = 1) is simulated.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "c1,c2,c3,c4")]
    pub engines: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "10000,20000,40000")]
    pub lengths: Vec<usize>,
    #[arg(long, default_value_t = gamchain::bench::DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value_t = gamchain::bench::DEFAULT_PARTICLES)]
    pub particles: usize,
    #[arg(long, default_value_t = gamchain::bench::DEFAULT_REPETITIONS)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[arg(long, value_delimiter = ',', default_value = "add,mul,exp,log,pow,gamma,digamma,lambert_w")]
    pub functions: Vec<String>,
    #[arg(long, default_value_t = gamchain::numerics::timing::MIN_EVALUATIONS)]
    pub evaluations: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DerivationArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gamchain: {e}");
            ExitCode::from(e.code())
        }
    }
}
