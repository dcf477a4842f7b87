//! `gpcs` command-line driver.

mod commands;
mod error;
mod ingest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult};
use crate::output::Format;

#[derive(Parser)]
#[command(name = "gpcs", version, about = "Generalized Pearson correlation squares")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure and confidence interval for one column pair.
    Estimate(EstimateArgs),
    /// Every column pair of a matrix, sorted by estimate.
    Scan(ScanArgs),
    /// Coverage of interval methods on simulated mixtures.
    Simulate(SimulateArgs),
    /// Permutation-test power on synthetic patterns.
    Power(PowerArgs),
}

#[derive(Args, Clone)]
pub struct CommonArgs {
    /// Master seed; falls back to GPCS_SEED, then 0.
    #[arg(long, env = "GPCS_SEED")]
    pub seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Fail with exit code 6 instead of reporting a fit that did not converge.
    #[arg(long)]
    pub strict: bool,
    /// K-lines random starts.
    #[arg(long, default_value_t = 30)]
    pub restarts: usize,
    /// K-lines iteration cap per start.
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
}

impl CommonArgs {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum CiChoice {
    PluginP1,
    PluginP2,
    Bootstrap,
    None,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum ResampleChoice {
    Parametric,
    Nonparametric,
}

#[derive(Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    /// Line-membership column; selects the specified scenario.
    #[arg(long)]
    pub label: Option<String>,
    /// Number of lines for the unspecified scenario.
    #[arg(long, conflicts_with_all = ["label", "k_max"])]
    pub k: Option<usize>,
    /// Choose K by AIC over 1..=k-max.
    #[arg(long, conflicts_with = "label")]
    pub k_max: Option<usize>,
    #[arg(long, value_enum, default_value = "plugin-p1")]
    pub ci: CiChoice,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 200)]
    pub b: usize,
    #[arg(long, value_enum, default_value = "nonparametric")]
    pub resample: ResampleChoice,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum MeasureChoice {
    R2,
    Dcor,
    Gcs,
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Columns to pair up (default: every numeric column).
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gcs")]
    pub measures: Vec<MeasureChoice>,
    #[arg(long, default_value_t = 2, conflicts_with = "k_max")]
    pub k: usize,
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Interval for the gcs column.
    #[arg(long, value_enum, default_value = "none")]
    pub ci: CiChoice,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 200)]
    pub b: usize,
    #[arg(long, value_enum, default_value = "nonparametric")]
    pub resample: ResampleChoice,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum ScenarioChoice {
    Specified,
    Unspecified,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Built-in setting 1..=8.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    pub setting: Option<u32>,
    /// JSON mixture spec file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "50,100")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "specified")]
    pub scenario: ScenarioChoice,
    /// Any of asymp, p1, p2, bootstrap.
    #[arg(long, value_delimiter = ',', default_value = "asymp,p1,p2")]
    pub methods: Vec<String>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 200)]
    pub b: usize,
    /// Pick K by AIC on every replicate instead of using the true K.
    #[arg(long)]
    pub k_max: Option<usize>,
    /// Sample size of the unspecified-scenario reference target.
    #[arg(long)]
    pub reference_n: Option<usize>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct PowerArgs {
    /// two_lines, linear, parabola, nonlinear_mix or none.
    #[arg(long)]
    pub pattern: String,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub sigma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "50")]
    pub n: Vec<usize>,
    /// Permutation replicates per cell.
    #[arg(long, default_value_t = 1000)]
    pub b: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "r2,dcor,gcs")]
    pub measures: Vec<MeasureChoice>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::InvalidArgs("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::InvalidArgs(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let common = match &cli.command {
        Command::Estimate(a) => &a.common,
        Command::Scan(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Power(a) => &a.common,
    };
    configure_threads(common.threads)?;
    match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Scan(a) => commands::scan(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Power(a) => commands::power(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
