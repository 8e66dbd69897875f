use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod table;

use config::Profile;

/// Emulated single-vs-batched matmul noise experiments.
///
/// Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 validation failure.
#[derive(Debug, Parser)]
#[command(name = "fpnoise", version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment, write the JSON report and print the summary table.
    Run(RunArgs),
    /// Check the Gaussian flip formula against Monte Carlo draws.
    ValidateNull(ValidateNullArgs),
    /// Print the summary table of an existing report.
    Show(ShowArgs),
    /// Write the covariance matrix retained in a report as CSV.
    DumpCov(DumpCovArgs),
}

/// Experiment parameters. Precedence: profile < config file < --set < dedicated flags.
#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Flat JSON object of config keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub profile: Profile,
    /// Generic override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub d_in: Option<usize>,
    #[arg(long)]
    pub d_out: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub n_trials: Option<usize>,
    /// f16, bf16 or f32.
    #[arg(long)]
    pub precision: Option<String>,
    /// sequential, pairwise, blocked:<n> or permuted:<seed>.
    #[arg(long)]
    pub schedule_single: Option<String>,
    #[arg(long)]
    pub schedule_batched: Option<String>,
    /// native, f32 or f64.
    #[arg(long)]
    pub accumulator: Option<String>,
    /// Accumulate in f64 (same as --accumulator f64).
    #[arg(long)]
    pub widened: bool,
    /// Reuse one weight matrix for every trial.
    #[arg(long)]
    pub fixed_weights: bool,
    #[arg(long)]
    pub flush_subnormals: bool,
    /// Required; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub experiment: ExperimentArgs,
    /// Report path; defaults to a file in $FPNOISE_OUTPUT_DIR (or the working directory).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, env = "FPNOISE_OUTPUT_DIR", hide_env_values = true)]
    pub output_dir: Option<PathBuf>,
    /// Embed the full covariance matrix in the report (needed by dump-cov).
    #[arg(long)]
    pub retain_covariance: bool,
    /// Also write the covariance matrix as CSV.
    #[arg(long)]
    pub cov_csv: Option<PathBuf>,
    /// Omit wall time so identical configs give byte-identical reports.
    #[arg(long)]
    pub no_timing: bool,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("margin_spec").required(true).args(["margin", "z", "margins_file"]))]
pub struct ValidateNullArgs {
    /// Noise standard deviation.
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: f64,
    /// Fixed logit margin.
    #[arg(long, allow_negative_numbers = true)]
    pub margin: Option<f64>,
    /// Fixed margin in units of sigma * sqrt(2).
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    /// Whitespace- or comma-separated margins, or a JSON array.
    #[arg(long)]
    pub margins_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_draws: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ShowArgs {
    pub report: PathBuf,
    /// Re-emit the parsed report as JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DumpCovArgs {
    pub report: PathBuf,
    /// CSV destination; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::cmd_run(&args),
        Command::ValidateNull(args) => commands::cmd_validate_null(&args),
        Command::Show(args) => commands::cmd_show(&args),
        Command::DumpCov(args) => commands::cmd_dump_covariance(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpnoise: {e}");
            e.exit_code()
        }
    }
}
