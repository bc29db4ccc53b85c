use crate::config::{invalid, read_json, required, resolve, CliError, CliResult};
use crate::{
    Cli, Command, CurveArgs, CurveMethodArg, PlanArgs, QqArgs, RuleArg, SimulateArgs, SimulateKind,
    TestArg, TestArgs,
};
use ratetest_core::planner::{rank_slices, time_to_wait, PlanRequest, Slice};
use ratetest_core::process::{count_histogram, estimator_variance_study, write_histogram_csv, WindowDesign};
use ratetest_core::tradeoff::{
    curve_monte_carlo, logit_grid, qq_data, qq_grid, write_qq_csv, ClosedForm,
    write_curves_csv, MonteCarloConfig, NullSwap,
};
use ratetest_core::wald::compare_tests;
use ratetest_core::{decide, CountObservation, RateTestInput};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Curve(args) => cmd_curve(args, cli.workers),
        Command::Qq(args) => cmd_qq(args),
        Command::Plan(args) => cmd_plan(args),
        Command::Simulate(args) => cmd_simulate(args, cli.workers),
    }
}

fn sink(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let mut out = sink(None)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| invalid(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn cmd_test(flags: &TestArgs) -> CliResult<()> {
    let a = resolve(flags.config.as_deref(), flags)?;
    let input = RateTestInput::new(
        required(a.n0, "n0")?,
        required(a.t0, "t0")?,
        required(a.n1, "n1")?,
        required(a.t1, "t1")?,
    )?;
    print_json(&decide(&input, required(a.alpha_hat, "alpha_hat")?)?)
}

fn rule_from(a: &CurveArgs) -> CliResult<NullSwap> {
    Ok(match a.rule.unwrap_or(RuleArg::Binomial) {
        RuleArg::Binomial => NullSwap::Binomial,
        RuleArg::Uniform => NullSwap::Uniform,
        RuleArg::PointMass => NullSwap::PointMassMixture {
            weight: required(a.weight, "weight")?,
            at_fraction: required(a.at_fraction, "at_fraction")?,
        },
        RuleArg::Scaled => NullSwap::Scaled {
            batch: required(a.batch, "batch")?,
        },
    })
}

fn cmd_curve(flags: &CurveArgs, workers: usize) -> CliResult<()> {
    let mut a = resolve(flags.config.as_deref(), flags)?;
    if let Some(path) = &flags.scenario_file {
        a.scenario = Some(read_json(path)?);
    }
    let scenario = required(a.scenario, "scenario")?;
    let grid = logit_grid(
        a.grid_size.unwrap_or(199),
        a.grid_lo.unwrap_or(0.001),
        a.grid_hi.unwrap_or(0.999),
    )?;
    let rule = rule_from(&a)?;
    let config = MonteCarloConfig {
        trials: a.trials.unwrap_or(100_000),
        seed: a.seed.unwrap_or(0),
        workers,
        condition_on_total: a.condition_on_total,
    };
    let mut out = sink(flags.out.as_deref())?;
    match (a.method.unwrap_or(CurveMethodArg::Closed), a.test.unwrap_or(TestArg::Rate)) {
        (CurveMethodArg::Closed, TestArg::Rate) => {
            if a.condition_on_total.is_some() {
                return Err(invalid("condition_on_total applies to Monte Carlo curves only"));
            }
            ClosedForm::new(&scenario, rule)?.curve(&grid)?.write_csv(&mut out)?;
        }
        (CurveMethodArg::Mc, TestArg::Rate) => {
            curve_monte_carlo(&scenario, &grid, rule, &config)?.write_csv(&mut out)?;
        }
        (CurveMethodArg::Mc, TestArg::WaldCompare) => {
            if rule != NullSwap::Binomial {
                return Err(invalid("the Wald comparison uses the plain rate test"));
            }
            let cmp = compare_tests(&scenario, &grid, &config)?;
            write_curves_csv(&[&cmp.rate_curve, &cmp.wald_curve], &mut out)?;
        }
        (CurveMethodArg::Closed, TestArg::WaldCompare) => {
            return Err(invalid("the Wald comparison is Monte Carlo only; use --method mc"));
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_qq(flags: &QqArgs) -> CliResult<()> {
    let a = resolve(flags.config.as_deref(), flags)?;
    let t = required(a.t, "t")?;
    let x = required(a.x, "x")?.count_distribution(t, 1)?;
    let y = required(a.y, "y")?.count_distribution(t, 1)?;
    let points = qq_data(&x, &y, &qq_grid(a.grid_size.unwrap_or(99))?)?;
    let mut out = sink(flags.out.as_deref())?;
    write_qq_csv(&points, &mut out)?;
    out.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct RankingRow {
    id: String,
    events: u64,
    exposure: f64,
}

fn cmd_plan(flags: &PlanArgs) -> CliResult<()> {
    if let Some(path) = &flags.ranking {
        let reference = CountObservation::new(
            required(flags.reference_events, "reference_events")?,
            required(flags.reference_exposure, "reference_exposure")?,
        )?;
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let slices = reader
            .deserialize::<RankingRow>()
            .map(|row| {
                let row = row.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
                Ok(Slice {
                    id: row.id,
                    observation: CountObservation::new(row.events, row.exposure)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        return print_json(&rank_slices(&slices, &reference)?);
    }
    let path = required(flags.request.as_ref(), "request")?;
    let mut req: PlanRequest = read_json(path)?;
    let overrides = resolve::<PlanArgs>(None, flags)?;
    req.baseline_rate = overrides.baseline_rate.unwrap_or(req.baseline_rate);
    req.effect = overrides.effect.unwrap_or(req.effect);
    req.target_fpr = overrides.target_fpr.unwrap_or(req.target_fpr);
    req.target_fnr = overrides.target_fnr.unwrap_or(req.target_fnr);
    print_json(&time_to_wait(&req).map_err(CliError::from)?)
}

fn cmd_simulate(flags: &SimulateArgs, workers: usize) -> CliResult<()> {
    let a = resolve(flags.config.as_deref(), flags)?;
    let model = required(a.model, "model")?;
    let t = required(a.t, "t")?;
    let samples = a.samples.unwrap_or(10_000);
    let seed = a.seed.unwrap_or(0);
    match a.kind.unwrap_or(SimulateKind::Counts) {
        SimulateKind::Counts => {
            if samples == 0 {
                return Err(invalid("samples must be >= 1"));
            }
            let rows = count_histogram(&model, t, samples, seed, workers)?;
            let mut out = sink(flags.out.as_deref())?;
            write_histogram_csv(&rows, &mut out)?;
            out.flush()?;
            Ok(())
        }
        SimulateKind::Estimator => {
            let design = match a.windows.unwrap_or(1) {
                1 => WindowDesign::SingleWindow { t },
                windows => WindowDesign::ManyWindows { windows, t },
            };
            let study = estimator_variance_study(&model, design, samples, seed, workers)?;
            match &flags.out {
                Some(p) => {
                    let mut out = sink(Some(p))?;
                    serde_json::to_writer_pretty(&mut out, &study).map_err(|e| invalid(e.to_string()))?;
                    writeln!(out)?;
                    out.flush()?;
                    Ok(())
                }
                None => print_json(&study),
            }
        }
    }
}
