//! False-positive / false-negative trade-off of the rate test.
//!
//! For a threshold `α̂` the test rejects when the treatment count reaches the
//! rejection start `r_n` of the observed total `n`. Both error rates are sums
//! over the joint law of the two group totals:
//! `P(accept) = Σ_n Σ_{j < r_n} P(N1 = j) P(N0 = n - j)`,
//! taken under equal rates for `α` (as `1 - P(accept)`) and under the
//! alternative for `β`.

use crate::dist::{
    pmf_table, truncation_point, BinomialParams, DiscreteDist, PoissonParams, Truncation,
};
use crate::error::{check_positive, check_probability_open, domain, Result};
use crate::process::{Family, ProcessModel};
use crate::rate_test::{null_head_prob, rejection_start, rejects};
use crate::sim::run_trials;
use serde::{Deserialize, Serialize};
use std::io::Write;

fn one() -> u32 {
    1
}

/// Control and treatment processes observed over `windows` windows of length `t` each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub control: ProcessModel,
    pub treatment: ProcessModel,
    pub t0: f64,
    pub t1: f64,
    #[serde(default = "one")]
    pub windows0: u32,
    #[serde(default = "one")]
    pub windows1: u32,
}

impl Scenario {
    /// Poisson rates `rate` and `rate + delta`.
    pub fn poisson(rate: f64, delta: f64, t0: f64, t1: f64) -> Self {
        Self {
            control: ProcessModel::Poisson { rate },
            treatment: ProcessModel::Poisson { rate: rate + delta },
            t0,
            t1,
            windows0: 1,
            windows1: 1,
        }
    }

    /// Batches of `batch` events arriving at rates `rate` and `rate + delta`.
    pub fn det_compound(rate: f64, delta: f64, batch: u32, t0: f64, t1: f64) -> Self {
        Self {
            control: ProcessModel::DetCompound { rate, batch },
            treatment: ProcessModel::DetCompound {
                rate: rate + delta,
                batch,
            },
            ..Self::poisson(rate, delta, t0, t1)
        }
    }

    /// Binomial batches arriving at rates `rate` and `rate + delta`.
    pub fn binom_compound(
        rate: f64,
        delta: f64,
        tosses: u32,
        head_prob: f64,
        t0: f64,
        t1: f64,
    ) -> Self {
        Self {
            control: ProcessModel::BinomCompound {
                rate,
                tosses,
                head_prob,
            },
            treatment: ProcessModel::BinomCompound {
                rate: rate + delta,
                tosses,
                head_prob,
            },
            ..Self::poisson(rate, delta, t0, t1)
        }
    }

    /// Gamma-mixed processes with mixing rates `theta` (control) and
    /// `theta - delta_theta` (treatment), `a` control and `b` treatment windows of length `t`.
    pub fn negative_binomial(shape: f64, theta: f64, delta_theta: f64, t: f64, a: u32, b: u32) -> Self {
        Self {
            control: ProcessModel::NegBinomial { shape, theta },
            treatment: ProcessModel::NegBinomial {
                shape,
                theta: theta - delta_theta,
            },
            t0: t,
            t1: t,
            windows0: a,
            windows1: b,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.control.validate()?;
        self.treatment.validate()?;
        if self.control.family() != self.treatment.family() {
            return Err(domain("control and treatment must belong to the same family"));
        }
        check_positive("t0", self.t0)?;
        check_positive("t1", self.t1)?;
        if self.windows0 == 0 || self.windows1 == 0 {
            return Err(domain("window counts must be >= 1"));
        }
        Ok(())
    }

    /// Total control and treatment exposure.
    pub fn exposures(&self) -> (f64, f64) {
        (
            self.t0 * f64::from(self.windows0),
            self.t1 * f64::from(self.windows1),
        )
    }

    /// Treatment share of events under equal rates.
    pub fn head_prob(&self) -> f64 {
        let (e0, e1) = self.exposures();
        null_head_prob(e0, e1)
    }

    /// The same design with the treatment following the control process.
    pub fn null_counterpart(&self) -> Self {
        Self {
            treatment: self.control,
            ..*self
        }
    }

    /// `δλ` for the Poisson-driven families, `δθ` for the Gamma-mixed one.
    pub fn effect_size(&self) -> f64 {
        match (self.control, self.treatment) {
            (ProcessModel::NegBinomial { theta: a, .. }, ProcessModel::NegBinomial { theta: b, .. }) => a - b,
            (ProcessModel::Poisson { rate: a }, ProcessModel::Poisson { rate: b })
            | (ProcessModel::DetCompound { rate: a, .. }, ProcessModel::DetCompound { rate: b, .. })
            | (ProcessModel::BinomCompound { rate: a, .. }, ProcessModel::BinomCompound { rate: b, .. }) => b - a,
            _ => f64::NAN,
        }
    }

    pub fn family(&self) -> Family {
        self.control.family()
    }
}

/// Law the p-value assumes for the treatment count given the total `n`.
///
/// `Binomial` is the rate test itself. The others replace that law with
/// another distribution on `0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum NullSwap {
    #[default]
    Binomial,
    /// Uniform on `0..=n`.
    Uniform,
    /// `weight` at `round(at_fraction * n)`, the rest spread as the binomial null.
    PointMassMixture { weight: f64, at_fraction: f64 },
    /// `batch · B(⌊n / batch⌋, p)`: the exact null for batches of `batch` events.
    Scaled { batch: u32 },
}

impl NullSwap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::PointMassMixture { weight, at_fraction } => {
                if !(0.0..=1.0).contains(&weight) || !(0.0..=1.0).contains(&at_fraction) {
                    return Err(domain("point-mass weight and location must lie in [0, 1]"));
                }
                Ok(())
            }
            Self::Scaled { batch: 0 } => Err(domain("batch must be >= 1")),
            _ => Ok(()),
        }
    }

    /// `P(Z >= n1)` for the swapped law `Z` at total `n`.
    pub fn p_value(&self, n1: u64, n: u64, head_prob: f64) -> f64 {
        let binom = |n1: u64, n: u64| BinomialParams { n, p: head_prob }.survival(n1 as i64 - 1);
        match *self {
            Self::Binomial => binom(n1, n),
            Self::Uniform => (n + 1 - n1.min(n + 1)) as f64 / (n + 1) as f64,
            Self::PointMassMixture { weight, at_fraction } => {
                let at = (at_fraction * n as f64).round() as u64;
                let point = if at >= n1 { weight } else { 0.0 };
                point + (1.0 - weight) * binom(n1, n)
            }
            Self::Scaled { batch } => {
                let l = u64::from(batch);
                binom(n1.div_ceil(l), n / l)
            }
        }
    }

    /// Smallest rejected treatment count at `alpha_hat`, or `n + 1`.
    pub fn rejection_start(&self, n: u64, head_prob: f64, alpha_hat: f64) -> u64 {
        if let Self::Binomial = self {
            return rejection_start(n, head_prob, alpha_hat);
        }
        let (mut lo, mut hi) = (0u64, n + 1);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if rejects(self.p_value(mid, n, head_prob), alpha_hat) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        lo
    }
}

/// Closed-form error rates for one scenario and one p-value rule.
///
/// Count mass functions are tabulated once up to their truncation points;
/// each threshold then costs one pass over the totals.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    head_prob: f64,
    rule: NullSwap,
    control: Vec<f64>,
    control_tail: Vec<f64>,
    treatment_null: Vec<f64>,
    treatment_alt: Vec<f64>,
}

fn suffix_sums(p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for i in (0..p.len()).rev() {
        out[i] = out[i + 1] + p[i];
    }
    out
}

fn table(model: &ProcessModel, t: f64, windows: u32, truncation: &Truncation) -> Result<Vec<f64>> {
    let d = model.count_distribution_with(t, windows, truncation)?;
    let upto = truncation_point(&d, truncation)?;
    Ok(pmf_table(&d, upto))
}

impl ClosedForm {
    pub fn new(scenario: &Scenario, rule: NullSwap) -> Result<Self> {
        Self::with_truncation(scenario, rule, &Truncation::default())
    }

    pub fn with_truncation(scenario: &Scenario, rule: NullSwap, truncation: &Truncation) -> Result<Self> {
        scenario.validate()?;
        rule.validate()?;
        // each of the two group tails may drop half the budget
        let half = Truncation {
            tail_mass: truncation.tail_mass / 2.0,
            ..*truncation
        };
        let control = table(&scenario.control, scenario.t0, scenario.windows0, &half)?;
        let treatment_null = table(&scenario.control, scenario.t1, scenario.windows1, &half)?;
        let treatment_alt = table(&scenario.treatment, scenario.t1, scenario.windows1, &half)?;
        Ok(Self {
            head_prob: scenario.head_prob(),
            rule,
            control_tail: suffix_sums(&control),
            control,
            treatment_null,
            treatment_alt,
        })
    }

    /// `α(α̂)`: rejection probability when both groups follow the control process.
    pub fn alpha(&self, alpha_hat: f64) -> Result<f64> {
        check_probability_open("alpha_hat", alpha_hat)?;
        let starts = self.starts(self.treatment_null.len(), alpha_hat);
        Ok((1.0 - self.accept(&self.treatment_null, &starts)).clamp(0.0, 1.0))
    }

    /// `β(α̂)`: acceptance probability under the alternative.
    pub fn beta(&self, alpha_hat: f64) -> Result<f64> {
        check_probability_open("alpha_hat", alpha_hat)?;
        let starts = self.starts(self.treatment_alt.len(), alpha_hat);
        Ok(self.accept(&self.treatment_alt, &starts).clamp(0.0, 1.0))
    }

    pub fn curve(&self, grid: &[f64]) -> Result<TradeoffCurve> {
        let points = grid
            .iter()
            .map(|&a| {
                Ok(CurvePoint {
                    alpha_hat: a,
                    alpha: self.alpha(a)?,
                    beta: self.beta(a)?,
                    alpha_se: 0.0,
                    beta_se: 0.0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TradeoffCurve {
            points,
            method: CurveMethod::ClosedForm,
            degenerate_fraction: None,
        })
    }

    /// Rejection start for every total `0..=max_n`.
    fn starts(&self, treatment_len: usize, alpha_hat: f64) -> Vec<u64> {
        let max_n = (self.control.len() + treatment_len - 2) as u64;
        let p = self.head_prob;
        if self.rule != NullSwap::Binomial {
            return (0..=max_n)
                .map(|n| self.rule.rejection_start(n, p, alpha_hat))
                .collect();
        }
        // For the binomial null r_{n+1} is r_n or r_n + 1. The tail a = P(B_n >= r)
        // is carried along with P(B_{n+1} >= r) = P(B_n >= r) + p P(B_n = r - 1)
        // and re-anchored periodically. Near-ties are settled by a direct search so
        // decisions match `decide` exactly.
        let close = |x: f64| (x - alpha_hat).abs() <= 1e-9 * alpha_hat;
        let mut out = Vec::with_capacity(max_n as usize + 1);
        let mut r = 1u64; // n = 0 never rejects
        let mut a = 0.0;
        out.push(r);
        for n in 1..=max_n {
            let prev = BinomialParams { n: n - 1, p };
            let cur = BinomialParams { n, p };
            a = if n % 256 == 0 {
                cur.survival(r as i64 - 1)
            } else {
                a + p * prev.pmf(r - 1)
            };
            let below = a + cur.pmf(r - 1);
            if rejects(a, alpha_hat) && !rejects(below, alpha_hat) && !close(a) && !close(below) {
                out.push(r);
                continue;
            }
            let next = (a - cur.pmf(r)).max(0.0);
            if !rejects(a, alpha_hat) && rejects(next, alpha_hat) && !close(a) && !close(next) {
                r += 1;
                a = next;
            } else {
                r = rejection_start(n, p, alpha_hat);
                a = cur.survival(r as i64 - 1);
            }
            out.push(r);
        }
        out
    }

    fn accept(&self, treatment: &[f64], starts: &[u64]) -> f64 {
        let regular = starts.windows(2).all(|w| w[1] >= w[0] && w[1] - w[0] <= 1);
        if regular {
            self.accept_regular(treatment, starts)
        } else {
            self.accept_direct(treatment, starts)
        }
    }

    /// When `r_n` grows by at most one per step, `j < r_{i+j}` holds exactly for
    /// `i >= i_min(j)`, so the inner sum is a control upper tail.
    fn accept_regular(&self, treatment: &[f64], starts: &[u64]) -> f64 {
        let k0 = self.control.len();
        let mut n = 0usize;
        let mut total = 0.0;
        for (j, &w) in treatment.iter().enumerate() {
            n = n.max(j);
            while n < starts.len() && starts[n] <= j as u64 {
                n += 1;
            }
            let i_min = n - j;
            if i_min >= k0 {
                break;
            }
            total += w * self.control_tail[i_min];
        }
        total
    }

    fn accept_direct(&self, treatment: &[f64], starts: &[u64]) -> f64 {
        let k0 = self.control.len();
        let mut total = 0.0;
        for (n, &r) in starts.iter().enumerate() {
            let lo = n.saturating_sub(k0 - 1);
            let hi = (r as usize).min(treatment.len()).min(n + 1);
            for j in lo..hi {
                total += treatment[j] * self.control[n - j];
            }
        }
        total
    }
}

/// `β(α̂)` of the rate test for any scenario.
pub fn beta_closed_form(scenario: &Scenario, alpha_hat: f64) -> Result<f64> {
    ClosedForm::new(scenario, NullSwap::Binomial)?.beta(alpha_hat)
}

/// `α(α̂)` of the rate test for any scenario.
pub fn alpha_closed_form(scenario: &Scenario, alpha_hat: f64) -> Result<f64> {
    ClosedForm::new(scenario, NullSwap::Binomial)?.alpha(alpha_hat)
}

/// False positive rate of the rate test when every arrival carries `batch` events.
///
/// Summed over the arrival total `m ~ Poisson(λ (t0 + t1))`: the treatment
/// count is `batch · k` with `k ~ B(m, p)` and the test accepts while
/// `batch · k` stays below the rejection start of `n = batch · m`.
pub fn alpha_closed_form_detcompound(
    lambda: f64,
    batch: u32,
    t0: f64,
    t1: f64,
    alpha_hat: f64,
) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("t0", t0)?;
    check_positive("t1", t1)?;
    check_probability_open("alpha_hat", alpha_hat)?;
    if batch == 0 {
        return Err(domain("batch must be >= 1"));
    }
    let l = u64::from(batch);
    let p = null_head_prob(t0, t1);
    let arrivals = PoissonParams::new(lambda * (t0 + t1))?;
    let upto = truncation_point(&arrivals, &Truncation::default())?;
    let mut accept = 0.0;
    for m in 0..=upto {
        let r = rejection_start(l * m, p, alpha_hat);
        if r == 0 {
            continue;
        }
        let k_max = (r - 1) / l;
        accept += arrivals.pmf(m) * BinomialParams { n: m, p }.cdf(k_max as i64);
    }
    Ok((1.0 - accept).clamp(0.0, 1.0))
}

/// `β(α̂)` for Gamma-mixed processes with `a` control and `b` treatment windows of length `t`.
pub fn beta_negbinomial(
    shape: f64,
    theta: f64,
    delta_theta: f64,
    t: f64,
    a: u32,
    b: u32,
    alpha_hat: f64,
) -> Result<f64> {
    if !(delta_theta < theta) {
        return Err(domain(format!(
            "delta_theta must be smaller than theta, got {delta_theta} >= {theta}"
        )));
    }
    beta_closed_form(&Scenario::negative_binomial(shape, theta, delta_theta, t, a, b), alpha_hat)
}

/// `β` at `α̂ = 1/2` for Poisson rates `λ` and `λ + δλ` over equal windows `t`:
/// `Σ_n Pois(n; (2λ + δλ) t) · P(B(n, (λ + δλ) / (2λ + δλ)) <= ⌊n / 2⌋)`.
pub fn beta_half_poisson(lambda: f64, delta: f64, t: f64) -> Result<f64> {
    check_positive("lambda", lambda)?;
    check_positive("t", t)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(domain("delta must be >= 0"));
    }
    let total = PoissonParams::new((2.0 * lambda + delta) * t)?;
    let q = (lambda + delta) / (2.0 * lambda + delta);
    let upto = truncation_point(&total, &Truncation::default())?;
    Ok((0..=upto)
        .map(|n| total.pmf(n) * BinomialParams { n, p: q }.cdf((n / 2) as i64))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub alpha_hat: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_se: f64,
    pub beta_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Rate,
    Wald,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveMethod {
    ClosedForm,
    MonteCarlo { trials: usize, seed: u64, test: TestKind },
}

impl CurveMethod {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ClosedForm => "closed-form",
            Self::MonteCarlo {
                test: TestKind::Rate,
                ..
            } => "mc-rate",
            Self::MonteCarlo {
                test: TestKind::Wald,
                ..
            } => "mc-wald",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub points: Vec<CurvePoint>,
    pub method: CurveMethod,
    /// Share of trials where the test could not be evaluated (Wald only).
    pub degenerate_fraction: Option<f64>,
}

impl TradeoffCurve {
    /// `β` and its standard error at realized false positive rate `alpha`,
    /// interpolated linearly between attained operating points.
    ///
    /// Runs of thresholds that realize the same `α` keep their smallest `β`;
    /// the trivial tests `(0, 1)` and `(1, 0)` anchor the ends.
    pub fn beta_at_alpha(&self, alpha: f64) -> (f64, f64) {
        let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(self.points.len() + 2);
        pts.push((0.0, 1.0, 0.0));
        let mut sorted = self.points.clone();
        sorted.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then(a.beta.total_cmp(&b.beta)));
        for p in sorted {
            match pts.last_mut() {
                Some(last) if last.0 == p.alpha => {
                    if p.beta < last.1 {
                        *last = (p.alpha, p.beta, p.beta_se);
                    }
                }
                _ => pts.push((p.alpha, p.beta, p.beta_se)),
            }
        }
        if pts.last().map(|p| p.0) != Some(1.0) {
            pts.push((1.0, 0.0, 0.0));
        }
        let i = pts.partition_point(|p| p.0 < alpha);
        if i == 0 {
            return (pts[0].1, pts[0].2);
        }
        if i == pts.len() {
            let p = pts[pts.len() - 1];
            return (p.1, p.2);
        }
        let (a0, b0, s0) = pts[i - 1];
        let (a1, b1, s1) = pts[i];
        if a1 == alpha {
            return (b1, s1);
        }
        let w = if a1 > a0 { (alpha - a0) / (a1 - a0) } else { 1.0 };
        (b0 + w * (b1 - b0), s0 + w * (s1 - s0))
    }

    /// Writes `alpha_hat,alpha,beta,alpha_se,beta_se,method`, plus
    /// `degenerate_fraction` when the curve carries one.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        write_curves_csv(&[self], out)
    }
}

/// Several curves in one CSV. The `degenerate_fraction` column appears when any
/// curve carries one and is left blank on rows of curves that do not.
pub fn write_curves_csv<W: Write>(curves: &[&TradeoffCurve], mut out: W) -> std::io::Result<()> {
    let extra = curves.iter().any(|c| c.degenerate_fraction.is_some());
    write!(out, "alpha_hat,alpha,beta,alpha_se,beta_se,method")?;
    if extra {
        write!(out, ",degenerate_fraction")?;
    }
    writeln!(out)?;
    for c in curves {
        let label = c.method.label();
        for p in &c.points {
            write!(
                out,
                "{},{},{},{},{},{}",
                p.alpha_hat, p.alpha, p.beta, p.alpha_se, p.beta_se, label
            )?;
            match (extra, c.degenerate_fraction) {
                (true, Some(d)) => writeln!(out, ",{d}")?,
                (true, None) => writeln!(out, ",")?,
                (false, _) => writeln!(out)?,
            }
        }
    }
    Ok(())
}

/// `count` points logit-spaced over `(lo, hi)`, endpoints included.
pub fn logit_grid(count: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    check_probability_open("lo", lo)?;
    check_probability_open("hi", hi)?;
    if count < 2 || lo >= hi {
        return Err(domain("grid needs at least two points and lo < hi"));
    }
    let logit = |p: f64| (p / (1.0 - p)).ln();
    let (a, b) = (logit(lo), logit(hi));
    Ok((0..count)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (count - 1) as f64;
            1.0 / (1.0 + (-x).exp())
        })
        .collect())
}

/// The default threshold grid: 199 logit-spaced points over `(0.001, 0.999)`.
pub fn default_grid() -> Vec<f64> {
    logit_grid(199, 0.001, 0.999).expect("valid default grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    /// Threads; 0 uses the global pool.
    #[serde(default)]
    pub workers: usize,
    /// Keep only draws whose two group counts add up to this total.
    #[serde(default)]
    pub condition_on_total: Option<u64>,
}

impl MonteCarloConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        Self {
            trials,
            seed,
            workers: 0,
            condition_on_total: None,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.trials < 1000 {
            return Err(domain(format!("at least 1000 trials are required, got {}", self.trials)));
        }
        Ok(())
    }
}

const MAX_CONDITIONING_ATTEMPTS: u32 = 1_000_000;

/// Simulated p-values under the null counterpart and under the scenario itself.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPValues {
    pub null: Vec<f64>,
    pub alt: Vec<f64>,
}

/// Draws `(n0, n1)` pairs under both hypotheses and evaluates `rule` on each.
pub fn simulate_p_values(
    scenario: &Scenario,
    rule: NullSwap,
    config: &MonteCarloConfig,
) -> Result<SimulatedPValues> {
    scenario.validate()?;
    rule.validate()?;
    config.validate()?;
    let p = scenario.head_prob();
    let s = *scenario;
    let draw = |model: &ProcessModel, rng: &mut crate::sim::SimRng| {
        let n0 = s.control.sample_windows(s.t0, s.windows0, rng);
        let n1 = model.sample_windows(s.t1, s.windows1, rng);
        (n0, n1)
    };
    let pairs = run_trials(config.trials, config.seed, config.workers, |rng| {
        let mut one = |model: &ProcessModel| match config.condition_on_total {
            None => Some(draw(model, rng)),
            Some(total) => (0..MAX_CONDITIONING_ATTEMPTS)
                .map(|_| draw(model, rng))
                .find(|(a, b)| a + b == total),
        };
        let null = one(&s.control);
        let alt = one(&s.treatment);
        null.zip(alt)
    });
    let mut out = SimulatedPValues {
        null: Vec::with_capacity(pairs.len()),
        alt: Vec::with_capacity(pairs.len()),
    };
    for pair in pairs {
        let ((a0, a1), (b0, b1)) =
            pair.ok_or_else(|| domain("conditioning total is too unlikely under this scenario"))?;
        out.null.push(rule.p_value(a1, a0 + a1, p));
        out.alt.push(rule.p_value(b1, b0 + b1, p));
    }
    Ok(out)
}

/// Operating points from simulated p-values: `α` is the share of null p-values
/// below `α̂`, `β` the share of alternative p-values at or above it.
pub fn curve_from_p_values(null: &[f64], alt: &[f64], grid: &[f64], method: CurveMethod) -> TradeoffCurve {
    let mut null = null.to_vec();
    let mut alt = alt.to_vec();
    null.sort_by(f64::total_cmp);
    alt.sort_by(f64::total_cmp);
    let (n0, n1) = (null.len() as f64, alt.len() as f64);
    let se = |p: f64, n: f64| if n > 0.0 { (p * (1.0 - p) / n).sqrt() } else { 0.0 };
    let points = grid
        .iter()
        .map(|&a| {
            let alpha = if n0 > 0.0 { null.partition_point(|&x| rejects(x, a)) as f64 / n0 } else { 0.0 };
            let beta = if n1 > 0.0 {
                1.0 - alt.partition_point(|&x| rejects(x, a)) as f64 / n1
            } else {
                1.0
            };
            CurvePoint {
                alpha_hat: a,
                alpha,
                beta,
                alpha_se: se(alpha, n0),
                beta_se: se(beta, n1),
            }
        })
        .collect();
    TradeoffCurve {
        points,
        method,
        degenerate_fraction: None,
    }
}

/// Monte Carlo trade-off curve of the test using `rule`.
pub fn curve_monte_carlo(
    scenario: &Scenario,
    grid: &[f64],
    rule: NullSwap,
    config: &MonteCarloConfig,
) -> Result<TradeoffCurve> {
    check_grid(grid)?;
    let sims = simulate_p_values(scenario, rule, config)?;
    Ok(curve_from_p_values(
        &sims.null,
        &sims.alt,
        grid,
        CurveMethod::MonteCarlo {
            trials: config.trials,
            seed: config.seed,
            test: TestKind::Rate,
        },
    ))
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(domain("threshold grid must not be empty"));
    }
    grid.iter().try_for_each(|&a| check_probability_open("alpha_hat", a))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub q: f64,
    pub x_quantile: u64,
    pub y_quantile: u64,
}

/// Paired quantiles `min{k : F(k) >= q}` of two distributions.
pub fn qq_data(dist_x: &dyn DiscreteDist, dist_y: &dyn DiscreteDist, q_grid: &[f64]) -> Result<Vec<QqPoint>> {
    q_grid
        .iter()
        .map(|&q| {
            Ok(QqPoint {
                q,
                x_quantile: crate::dist::inverse_cdf(dist_x, q)?,
                y_quantile: crate::dist::inverse_cdf(dist_y, q)?,
            })
        })
        .collect()
}

/// `size` evenly spaced probabilities `i / (size + 1)`.
pub fn qq_grid(size: usize) -> Result<Vec<f64>> {
    if size == 0 {
        return Err(domain("grid size must be >= 1"));
    }
    Ok((1..=size).map(|i| i as f64 / (size + 1) as f64).collect())
}

/// Least-squares line through QQ points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual, in units of `y`.
    pub rms: f64,
    /// `rms` divided by the standard deviation of `y`; scale free.
    pub relative_rms: f64,
}

pub fn fit_line(points: &[QqPoint]) -> Result<LineFit> {
    if points.len() < 2 {
        return Err(domain("need at least two points"));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.x_quantile as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.y_quantile as f64).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(domain("x quantiles are constant"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let rms = (sse / n).sqrt();
    let sd = (syy / n).sqrt();
    Ok(LineFit {
        slope,
        intercept,
        rms,
        relative_rms: if sd > 0.0 { rms / sd } else { 0.0 },
    })
}

pub fn write_qq_csv<W: Write>(points: &[QqPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "q,x_quantile,y_quantile")?;
    for p in points {
        writeln!(out, "{},{},{}", p.q, p.x_quantile, p.y_quantile)?;
    }
    Ok(())
}
