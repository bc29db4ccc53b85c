//! Wald test on the log rate ratio for negative-binomial counts, with the
//! dispersion `k` supplied rather than estimated.

use crate::dist::normal_survival;
use crate::error::{check_positive, domain, Error, Result};
use crate::process::ProcessModel;
use crate::tradeoff::{check_grid, curve_from_p_values, CurveMethod, MonteCarloConfig, Scenario, TestKind, TradeoffCurve};
use crate::rate_test::p_value_from_counts;
use crate::sim::run_trials;
use serde::{Deserialize, Serialize};

/// Per-subject counts, each subject observed for `exposure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldInput {
    pub control_counts: Vec<u64>,
    pub treatment_counts: Vec<u64>,
    pub exposure: f64,
    /// `k = 1 / m` for Gamma shape `m`.
    pub dispersion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaldStatistic {
    pub rate0: f64,
    pub rate1: f64,
    /// `ln(rate1) - ln(rate0)`.
    pub log_ratio: f64,
    pub variance: f64,
    pub sigma: f64,
    pub p_value: f64,
}

/// `V = (1 + η²) / (μ_t (μ0 + η μ1)) + (1 + η) k / η`, where `μ0`, `μ1` are the
/// group mean counts per observation period, `μ_t` the pooled mean and
/// `η` the treatment-to-control subject ratio.
pub fn wald_variance(mu0: f64, mu1: f64, mu_t: f64, eta: f64, k: f64) -> f64 {
    (1.0 + eta * eta) / (mu_t * (mu0 + eta * mu1)) + (1.0 + eta) * k / eta
}

pub fn wald_statistic(input: &WaldInput) -> Result<WaldStatistic> {
    check_positive("exposure", input.exposure)?;
    check_positive("dispersion", input.dispersion)?;
    if input.control_counts.is_empty() || input.treatment_counts.is_empty() {
        return Err(domain("both groups need at least one subject"));
    }
    let s0: u64 = input.control_counts.iter().sum();
    let s1: u64 = input.treatment_counts.iter().sum();
    if s0 == 0 {
        return Err(Error::DegenerateVariance { group: "control" });
    }
    if s1 == 0 {
        return Err(Error::DegenerateVariance { group: "treatment" });
    }
    let c0 = input.control_counts.len() as f64;
    let c1 = input.treatment_counts.len() as f64;
    let mu0 = s0 as f64 / c0;
    let mu1 = s1 as f64 / c1;
    let mu_t = (s0 + s1) as f64 / (c0 + c1);
    let eta = c1 / c0;
    let variance = wald_variance(mu0, mu1, mu_t, eta, input.dispersion);
    let sigma = (variance / c0).sqrt();
    let log_ratio = mu1.ln() - mu0.ln();
    Ok(WaldStatistic {
        rate0: mu0 / input.exposure,
        rate1: mu1 / input.exposure,
        log_ratio,
        variance,
        sigma,
        p_value: normal_survival(log_ratio, sigma)?,
    })
}

/// One-sided p-value for an increase of the treatment rate.
pub fn wald_p_value(input: &WaldInput) -> Result<f64> {
    Ok(wald_statistic(input)?.p_value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestComparison {
    pub wald_curve: TradeoffCurve,
    pub rate_curve: TradeoffCurve,
    pub degenerate_trials: usize,
}

/// Runs the Wald test and the rate test on the same simulated data sets.
///
/// Each of the `a` control and `b` treatment windows is one subject. Data sets
/// where a group has no events are dropped from the Wald curve only.
pub fn compare_tests(scenario: &Scenario, grid: &[f64], config: &MonteCarloConfig) -> Result<TestComparison> {
    scenario.validate()?;
    config.validate()?;
    check_grid(grid)?;
    let ProcessModel::NegBinomial { shape, .. } = scenario.control else {
        return Err(domain("the Wald comparison needs a negative binomial scenario"));
    };
    if scenario.t0 != scenario.t1 {
        return Err(domain("the Wald comparison needs equal window lengths"));
    }
    if config.condition_on_total.is_some() {
        return Err(domain("conditioning is not supported for the Wald comparison"));
    }
    let s = *scenario;
    let p = s.head_prob();
    let k = 1.0 / shape;
    let evaluate = |c0: Vec<u64>, c1: Vec<u64>| {
        let n0: u64 = c0.iter().sum();
        let n1: u64 = c1.iter().sum();
        let rate = p_value_from_counts(n1, n0 + n1, p);
        let wald = wald_p_value(&WaldInput {
            control_counts: c0,
            treatment_counts: c1,
            exposure: s.t0,
            dispersion: k,
        })
        .ok();
        (rate, wald)
    };
    let trials = run_trials(config.trials, config.seed, config.workers, |rng| {
        let null0 = s.control.sample_window_counts(s.t0, s.windows0, rng);
        let null1 = s.control.sample_window_counts(s.t1, s.windows1, rng);
        let alt0 = s.control.sample_window_counts(s.t0, s.windows0, rng);
        let alt1 = s.treatment.sample_window_counts(s.t1, s.windows1, rng);
        (evaluate(null0, null1), evaluate(alt0, alt1))
    });
    let mut rate_null = Vec::with_capacity(trials.len());
    let mut rate_alt = Vec::with_capacity(trials.len());
    let mut wald_null = Vec::with_capacity(trials.len());
    let mut wald_alt = Vec::with_capacity(trials.len());
    let mut degenerate = 0usize;
    for ((rn, wn), (ra, wa)) in trials {
        rate_null.push(rn);
        rate_alt.push(ra);
        match wn {
            Some(w) => wald_null.push(w),
            None => degenerate += 1,
        }
        match wa {
            Some(w) => wald_alt.push(w),
            None => degenerate += 1,
        }
    }
    let method = |test| CurveMethod::MonteCarlo {
        trials: config.trials,
        seed: config.seed,
        test,
    };
    let mut wald_curve = curve_from_p_values(&wald_null, &wald_alt, grid, method(TestKind::Wald));
    wald_curve.degenerate_fraction = Some(degenerate as f64 / (2 * config.trials) as f64);
    let rate_curve = curve_from_p_values(&rate_null, &rate_alt, grid, method(TestKind::Rate));
    Ok(TestComparison {
        wald_curve,
        rate_curve,
        degenerate_trials: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(c0: &[u64], c1: &[u64]) -> WaldInput {
        WaldInput {
            control_counts: c0.to_vec(),
            treatment_counts: c1.to_vec(),
            exposure: 2.0,
            dispersion: 0.5,
        }
    }

    #[test]
    fn equal_means_give_one_half() {
        let p = wald_p_value(&input(&[1, 3, 2], &[2, 2, 2])).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn variance_example() {
        assert!((wald_variance(1.0, 1.0, 1.0, 1.0, 0.5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_groups_are_degenerate() {
        assert_eq!(
            wald_p_value(&input(&[0, 0], &[1, 2])),
            Err(Error::DegenerateVariance { group: "control" })
        );
        assert_eq!(
            wald_p_value(&input(&[1], &[0])),
            Err(Error::DegenerateVariance { group: "treatment" })
        );
    }

    #[test]
    fn exposure_scaling_leaves_p_unchanged() {
        let a = input(&[3, 1, 4], &[5, 9, 2, 6]);
        let mut b = a.clone();
        b.exposure = 17.0;
        let (sa, sb) = (wald_statistic(&a).unwrap(), wald_statistic(&b).unwrap());
        assert_eq!(sa.p_value, sb.p_value);
        assert!((sa.rate0 / sb.rate0 - 8.5).abs() < 1e-12);
    }

    #[test]
    fn p_decreases_with_treatment_rate() {
        let lo = wald_p_value(&input(&[4, 4], &[5, 5])).unwrap();
        let hi = wald_p_value(&input(&[4, 4], &[6, 6])).unwrap();
        assert!(hi < lo);
    }
}
