//! `ratetest`: run the rate test, trade-off curves, QQ data, plans and simulations.
//!
//! Exit codes: 0 success, 2 invalid input, 3 infeasible plan, 1 I/O failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(
    name = "ratetest",
    version,
    about = "Exact conditional rate test and its error trade-offs",
    after_help = "Exit codes: 0 success, 2 invalid input, 3 infeasible plan, 1 I/O failure.\n\
                  Every subcommand accepts --config FILE (JSON); flags override file values."
)]
pub struct Cli {
    /// Worker threads for simulations; 0 uses all cores. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test whether the treatment rate exceeds the control rate.
    Test(TestArgs),
    /// Trade-off curve (alpha_hat, alpha, beta) as CSV.
    Curve(CurveArgs),
    /// Paired quantiles of two count distributions as CSV.
    Qq(QqArgs),
    /// Recommend how long to collect data, or rank slices by p-value.
    Plan(PlanArgs),
    /// Simulate a process: count histogram or rate-estimator study.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TestArgs {
    /// JSON file with any of the fields below.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Control events.
    #[arg(long)]
    pub n0: Option<u64>,
    /// Control exposure.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Treatment events.
    #[arg(long)]
    pub n1: Option<u64>,
    /// Treatment exposure.
    #[arg(long)]
    pub t1: Option<f64>,
    /// Rejection threshold on the p-value.
    #[arg(long)]
    pub alpha_hat: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMethodArg {
    Closed,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Binomial,
    Uniform,
    PointMass,
    Scaled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestArg {
    Rate,
    WaldCompare,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CurveArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Scenario JSON file; in a config file `scenario` holds the object itself.
    #[arg(long = "scenario", value_name = "FILE")]
    #[serde(skip)]
    pub scenario_file: Option<PathBuf>,
    #[arg(skip)]
    pub scenario: Option<ratetest_core::tradeoff::Scenario>,
    #[arg(long, value_enum)]
    pub method: Option<CurveMethodArg>,
    /// Monte Carlo trials (default 100000).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threshold grid size (default 199).
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Smallest threshold (default 0.001).
    #[arg(long)]
    pub grid_lo: Option<f64>,
    /// Largest threshold (default 0.999).
    #[arg(long)]
    pub grid_hi: Option<f64>,
    /// Law assumed for the treatment count given the total (default binomial).
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Batch size for the scaled rule.
    #[arg(long)]
    pub batch: Option<u32>,
    /// Point-mass weight for the point-mass rule.
    #[arg(long)]
    pub weight: Option<f64>,
    /// Point-mass location as a fraction of the total.
    #[arg(long)]
    pub at_fraction: Option<f64>,
    /// Keep only simulated draws with this many events in total.
    #[arg(long)]
    pub condition_on_total: Option<u64>,
    /// Which test to simulate (default rate).
    #[arg(long, value_enum)]
    pub test: Option<TestArg>,
    /// Output file (default standard output).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct QqArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Model on the x axis, as inline JSON.
    #[arg(long, value_parser = parse_model)]
    pub x: Option<ratetest_core::ProcessModel>,
    /// Model on the y axis, as inline JSON.
    #[arg(long, value_parser = parse_model)]
    pub y: Option<ratetest_core::ProcessModel>,
    /// Window length.
    #[arg(long)]
    pub t: Option<f64>,
    /// Number of probabilities i / (size + 1) (default 99).
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PlanArgs {
    /// Plan request JSON file.
    #[arg(long, conflicts_with = "ranking")]
    #[serde(skip)]
    pub request: Option<PathBuf>,
    /// CSV with columns id,events,exposure to rank against the reference.
    #[arg(long, requires_all = ["reference_events", "reference_exposure"])]
    #[serde(skip)]
    pub ranking: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub reference_events: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub reference_exposure: Option<f64>,
    #[arg(long)]
    pub baseline_rate: Option<f64>,
    #[arg(long)]
    pub effect: Option<f64>,
    #[arg(long)]
    pub target_fpr: Option<f64>,
    #[arg(long)]
    pub target_fnr: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateKind {
    Counts,
    Estimator,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Process model, as inline JSON.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ratetest_core::ProcessModel>,
    /// Window length.
    #[arg(long)]
    pub t: Option<f64>,
    /// Windows per estimate (estimator study only, default 1).
    #[arg(long)]
    pub windows: Option<u32>,
    /// Draws (default 10000).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram of window counts (CSV) or rate-estimator summary (JSON). Default counts.
    #[arg(long, value_enum)]
    pub kind: Option<SimulateKind>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn parse_model(s: &str) -> Result<ratetest_core::ProcessModel, String> {
    serde_json::from_str(s).map_err(|e| format!("invalid model JSON: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
