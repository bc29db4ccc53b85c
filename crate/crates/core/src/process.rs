//! Point-process models: simulators, exact count distributions, and the
//! rate, hazard and MTTF estimators.
//!
//! Gamma mixing follows the density `g(λ) = θ e^{-θλ} (θλ)^{m-1} / Γ(m)`:
//! `m` is the shape and `θ` a *rate* (inverse time), so `E[L] = m / θ` and
//! `V[L] = m / θ²`. Samplers that take a scale receive `1 / θ`.

use crate::dist::{
    truncation_point, DiscreteDist, NegBinomialParams, PoissonParams, Scaled, Truncation,
};
use crate::error::{check_positive, check_probability, domain, Result};
use crate::sim::{rng_from_seed, run_trials, SimRng};
use rand::Rng;
use rand_distr::{Binomial, Distribution, Exp, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One of the four point-process families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProcessModel {
    /// Homogeneous Poisson process with `rate` events per unit time.
    Poisson { rate: f64 },
    /// Every Poisson arrival carries exactly `batch` events.
    DetCompound { rate: f64, batch: u32 },
    /// Every Poisson arrival carries `Binomial(tosses, head_prob)` events.
    BinomCompound { rate: f64, tosses: u32, head_prob: f64 },
    /// Poisson process whose rate is drawn once per window from `Gamma(shape, theta)`.
    NegBinomial { shape: f64, theta: f64 },
}

/// Family tag without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Poisson,
    DetCompound,
    BinomCompound,
    NegBinomial,
}

impl ProcessModel {
    pub fn family(&self) -> Family {
        match self {
            Self::Poisson { .. } => Family::Poisson,
            Self::DetCompound { .. } => Family::DetCompound,
            Self::BinomCompound { .. } => Family::BinomCompound,
            Self::NegBinomial { .. } => Family::NegBinomial,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check_rate = |rate: f64| {
            if rate >= 0.0 && rate.is_finite() {
                Ok(())
            } else {
                Err(domain(format!("rate must be >= 0, got {rate}")))
            }
        };
        match *self {
            Self::Poisson { rate } => check_rate(rate),
            Self::DetCompound { rate, batch } => {
                check_rate(rate)?;
                if batch == 0 {
                    return Err(domain("batch must be >= 1"));
                }
                Ok(())
            }
            Self::BinomCompound {
                rate,
                tosses,
                head_prob,
            } => {
                check_rate(rate)?;
                if tosses == 0 {
                    return Err(domain("tosses must be >= 1"));
                }
                check_probability("head_prob", head_prob)
            }
            Self::NegBinomial { shape, theta } => {
                check_positive("shape", shape)?;
                check_positive("theta", theta)
            }
        }
    }

    /// Long-run events per unit time.
    pub fn mean_rate(&self) -> f64 {
        match *self {
            Self::Poisson { rate } => rate,
            Self::DetCompound { rate, batch } => rate * f64::from(batch),
            Self::BinomCompound {
                rate,
                tosses,
                head_prob,
            } => rate * f64::from(tosses) * head_prob,
            Self::NegBinomial { shape, theta } => shape / theta,
        }
    }

    /// `E[N(t)]` for one window.
    pub fn count_mean(&self, t: f64) -> f64 {
        self.mean_rate() * t
    }

    /// `V[N(t)]` for one window.
    pub fn count_variance(&self, t: f64) -> f64 {
        match *self {
            Self::Poisson { rate } => rate * t,
            Self::DetCompound { rate, batch } => rate * t * f64::from(batch).powi(2),
            Self::BinomCompound {
                rate,
                tosses,
                head_prob,
            } => {
                let l = f64::from(tosses);
                // E[C^2] = Var C + (E C)^2
                rate * t * (l * head_prob * (1.0 - head_prob) + (l * head_prob).powi(2))
            }
            Self::NegBinomial { shape, theta } => {
                shape * t / theta + t * t * shape / (theta * theta)
            }
        }
    }

    /// Exact distribution of the total count over `windows` independent windows of length `t`.
    pub fn count_distribution(&self, t: f64, windows: u32) -> Result<CountDist> {
        self.count_distribution_with(t, windows, &Truncation::default())
    }

    pub fn count_distribution_with(
        &self,
        t: f64,
        windows: u32,
        truncation: &Truncation,
    ) -> Result<CountDist> {
        self.validate()?;
        check_positive("t", t)?;
        if windows == 0 {
            return Err(domain("windows must be >= 1"));
        }
        let w = f64::from(windows);
        Ok(match *self {
            Self::Poisson { rate } => CountDist::Poisson(PoissonParams::new(rate * t * w)?),
            Self::DetCompound { rate, batch } => CountDist::DetCompound(Scaled::new(
                PoissonParams::new(rate * t * w)?,
                u64::from(batch),
            )?),
            Self::BinomCompound {
                rate,
                tosses,
                head_prob,
            } => CountDist::BinomCompound(BinomCompoundCount::new(
                rate * t * w,
                tosses,
                head_prob,
                truncation,
            )?),
            Self::NegBinomial { shape, theta } => {
                CountDist::NegBinomial(NegBinomialParams::new(shape * w, theta / (theta + t))?)
            }
        })
    }

    /// One draw of the count in a window of length `t`.
    pub fn sample_count(&self, t: f64, rng: &mut SimRng) -> u64 {
        match *self {
            Self::Poisson { rate } => sample_poisson(rate * t, rng),
            Self::DetCompound { rate, batch } => u64::from(batch) * sample_poisson(rate * t, rng),
            Self::BinomCompound {
                rate,
                tosses,
                head_prob,
            } => {
                let arrivals = sample_poisson(rate * t, rng);
                let trials = arrivals * u64::from(tosses);
                if trials == 0 {
                    return 0;
                }
                Binomial::new(trials, head_prob)
                    .expect("validated head probability")
                    .sample(rng)
            }
            Self::NegBinomial { shape, theta } => {
                let rate = Gamma::new(shape, 1.0 / theta)
                    .expect("validated gamma parameters")
                    .sample(rng);
                sample_poisson(rate * t, rng)
            }
        }
    }

    /// Total count over `windows` independent windows of length `t`.
    pub fn sample_windows(&self, t: f64, windows: u32, rng: &mut SimRng) -> u64 {
        (0..windows).map(|_| self.sample_count(t, rng)).sum()
    }

    /// Per-window counts over `windows` independent windows of length `t`.
    pub fn sample_window_counts(&self, t: f64, windows: u32, rng: &mut SimRng) -> Vec<u64> {
        (0..windows).map(|_| self.sample_count(t, rng)).collect()
    }
}

fn sample_poisson(mean: f64, rng: &mut SimRng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let x: f64 = Poisson::new(mean).expect("finite positive mean").sample(rng);
    x as u64
}

/// One sample of `N(t)` from a generator seeded with `rng_seed`.
pub fn count_in_window(model: &ProcessModel, t: f64, rng_seed: u64) -> Result<u64> {
    model.validate()?;
    check_positive("t", t)?;
    Ok(model.sample_count(t, &mut rng_from_seed(rng_seed)))
}

/// Exact `P(N(t) = k)` for a single window.
pub fn count_pmf(model: &ProcessModel, t: f64, k: u64) -> Result<f64> {
    Ok(model.count_distribution(t, 1)?.pmf(k))
}

/// Count distribution of a process family over a fixed exposure.
#[derive(Debug, Clone, PartialEq)]
pub enum CountDist {
    Poisson(PoissonParams),
    DetCompound(Scaled<PoissonParams>),
    BinomCompound(BinomCompoundCount),
    NegBinomial(NegBinomialParams),
}

impl CountDist {
    fn inner(&self) -> &dyn DiscreteDist {
        match self {
            Self::Poisson(d) => d,
            Self::DetCompound(d) => d,
            Self::BinomCompound(d) => d,
            Self::NegBinomial(d) => d,
        }
    }
}

impl DiscreteDist for CountDist {
    fn pmf(&self, k: u64) -> f64 {
        self.inner().pmf(k)
    }
    fn support_max(&self) -> Option<u64> {
        self.inner().support_max()
    }
    fn cdf(&self, k: i64) -> f64 {
        self.inner().cdf(k)
    }
    fn survival(&self, k: i64) -> f64 {
        self.inner().survival(k)
    }
}

/// Count of a binomially compounded Poisson process:
/// `P(M = j) = Σ_m Pois(m; μ) · B(j; l m, p)`, with the arrival index `m`
/// restricted to the range carrying all but `tail_mass` of the Poisson weight.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomCompoundCount {
    arrivals_mean: f64,
    tosses: u64,
    head_prob: f64,
    weights: Vec<f64>,
    first_arrival: u64,
}

impl BinomCompoundCount {
    pub fn new(arrivals_mean: f64, tosses: u32, head_prob: f64, truncation: &Truncation) -> Result<Self> {
        check_probability("head_prob", head_prob)?;
        let pois = PoissonParams::new(arrivals_mean)?;
        let half = Truncation {
            tail_mass: truncation.tail_mass / 2.0,
            ..*truncation
        };
        let hi = truncation_point(&pois, &half)?;
        let mut lo = 0u64;
        while lo < hi && pois.cdf(lo as i64) <= half.tail_mass {
            lo += 1;
        }
        let weights = (lo..=hi).map(|m| pois.pmf(m)).collect();
        Ok(Self {
            arrivals_mean,
            tosses: u64::from(tosses),
            head_prob,
            weights,
            first_arrival: lo,
        })
    }

    pub fn arrivals_mean(&self) -> f64 {
        self.arrivals_mean
    }
}

impl DiscreteDist for BinomCompoundCount {
    fn pmf(&self, j: u64) -> f64 {
        use crate::dist::BinomialParams;
        let l = self.tosses;
        let mut total = 0.0;
        for (i, &w) in self.weights.iter().enumerate() {
            let m = self.first_arrival + i as u64;
            let n = l * m;
            if j > n {
                continue;
            }
            total += w * BinomialParams { n, p: self.head_prob }.pmf(j);
        }
        total
    }

    fn support_max(&self) -> Option<u64> {
        if self.head_prob == 0.0 {
            return Some(0);
        }
        None
    }
}

/// Sampled histogram of window counts with the exact mass alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramRow {
    pub k: u64,
    pub count: u64,
    pub pmf: f64,
}

/// Draws `samples` window counts and tabulates them against `count_pmf`.
pub fn count_histogram(
    model: &ProcessModel,
    t: f64,
    samples: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<HistogramRow>> {
    let dist = model.count_distribution(t, 1)?;
    let draws = run_trials(samples, seed, workers, |rng| model.sample_count(t, rng));
    let max = draws.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0u64; max as usize + 1];
    for d in draws {
        counts[d as usize] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramRow {
            k: k as u64,
            count,
            pmf: dist.pmf(k as u64),
        })
        .collect())
}

/// Writes histogram rows as CSV with header `k,count,pmf`.
pub fn write_histogram_csv<W: Write>(rows: &[HistogramRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "k,count,pmf")?;
    for r in rows {
        writeln!(out, "{},{},{:e}", r.k, r.count, r.pmf)?;
    }
    Ok(())
}

/// Events observed over an exposure (for instance VM uptime).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountObservation {
    pub events: u64,
    pub exposure: f64,
}

impl CountObservation {
    /// Zero or non-finite exposure is rejected rather than read as "no events".
    pub fn new(events: u64, exposure: f64) -> Result<Self> {
        check_positive("exposure", exposure)?;
        Ok(Self { events, exposure })
    }

    pub fn rate(&self) -> f64 {
        self.events as f64 / self.exposure
    }
}

/// Maximum likelihood rate over a set of observations: total events over total exposure.
pub fn estimate_rate(obs: &[CountObservation]) -> Result<f64> {
    if obs.is_empty() {
        return Err(domain("no observations"));
    }
    let mut events = 0u64;
    let mut exposure = 0.0;
    for o in obs {
        check_positive("exposure", o.exposure)?;
        events += o.events;
        exposure += o.exposure;
    }
    Ok(events as f64 / exposure)
}

/// Inter-arrival distributions with closed-form hazards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum InterArrival {
    Exponential { rate: f64 },
    /// Pareto type II arising from Gamma(`shape`, `theta`) mixing of exponentials.
    Lomax { shape: f64, theta: f64 },
}

impl InterArrival {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Exponential { rate } => check_positive("rate", rate),
            Self::Lomax { shape, theta } => {
                check_positive("shape", shape)?;
                check_positive("theta", theta)
            }
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => rate * (-rate * t).exp(),
            Self::Lomax { shape, theta } => {
                shape / theta * (theta / (t + theta)).powf(shape + 1.0)
            }
        }
    }

    /// `P(T > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        match *self {
            Self::Exponential { rate } => (-rate * t).exp(),
            Self::Lomax { shape, theta } => (theta / (t + theta)).powf(shape),
        }
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        self.sample_with(LomaxSampler::InverseCdf, rng)
    }

    /// Draws one inter-arrival time; `method` only matters for Lomax.
    pub fn sample_with(&self, method: LomaxSampler, rng: &mut SimRng) -> f64 {
        match *self {
            Self::Exponential { rate } => Exp::new(rate).expect("validated rate").sample(rng),
            Self::Lomax { shape, theta } => match method {
                LomaxSampler::InverseCdf => {
                    // S(t) = (θ / (t + θ))^m  =>  t = θ (U^{-1/m} - 1)
                    let u: f64 = 1.0 - rng.random::<f64>();
                    theta * (u.powf(-1.0 / shape) - 1.0)
                }
                LomaxSampler::GammaMixture => {
                    let rate = Gamma::new(shape, 1.0 / theta)
                        .expect("validated gamma parameters")
                        .sample(rng);
                    Exp::new(rate).expect("positive rate").sample(rng)
                }
            },
        }
    }
}

/// Sampling route for Lomax draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LomaxSampler {
    InverseCdf,
    GammaMixture,
}

/// Hazard `h(t) = f(t) / S(t)`.
pub fn hazard_rate(family: &InterArrival, t: f64) -> Result<f64> {
    family.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(format!("t must be >= 0, got {t}")));
    }
    Ok(match *family {
        InterArrival::Exponential { rate } => rate,
        // f/S simplifies to m / (t + θ); avoids 0/0 deep in the tail
        InterArrival::Lomax { shape, theta } => shape / (t + theta),
    })
}

/// One inter-arrival draw from a generator seeded with `rng_seed`.
pub fn interarrival_sample(family: &InterArrival, rng_seed: u64) -> Result<f64> {
    family.validate()?;
    Ok(family.sample(&mut rng_from_seed(rng_seed)))
}

/// Up-times ending in a failure (`uncensored`) and up-times cut off before one (`censored`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    pub uncensored: Vec<f64>,
    pub censored: Vec<f64>,
}

impl CensoredSample {
    fn validate(&self) -> Result<()> {
        if self
            .uncensored
            .iter()
            .chain(&self.censored)
            .any(|&d| !(d >= 0.0 && d.is_finite()))
        {
            return Err(domain("durations must be finite and >= 0"));
        }
        Ok(())
    }

    /// Exponential log-likelihood `n ln λ - λ (Σ t_i + Σ x_j)`.
    pub fn log_likelihood(&self, rate: f64) -> f64 {
        let n = self.uncensored.len() as f64;
        let total: f64 = self.uncensored.iter().chain(&self.censored).sum();
        n * rate.ln() - rate * total
    }
}

/// Mean time to failure under exponential up-times: all up-time over the failure count.
pub fn mttf_censored(sample: &CensoredSample) -> Result<f64> {
    sample.validate()?;
    if sample.uncensored.is_empty() {
        return Err(domain("at least one uncensored failure is needed to estimate MTTF"));
    }
    let total: f64 = sample.uncensored.iter().chain(&sample.censored).sum();
    Ok(total / sample.uncensored.len() as f64)
}

/// Observation design for the rate estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum WindowDesign {
    SingleWindow { t: f64 },
    ManyWindows { windows: u32, t: f64 },
}

/// Monte Carlo summary of the rate estimator `Σ N / Σ t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceStudy {
    pub trials: usize,
    pub mean: f64,
    pub variance: f64,
    /// Standard error of `mean`.
    pub mean_se: f64,
    /// Standard error of the sample variance (fourth-moment formula).
    pub variance_se: f64,
}

pub fn estimator_variance_study(
    model: &ProcessModel,
    design: WindowDesign,
    trials: usize,
    rng_seed: u64,
    workers: usize,
) -> Result<VarianceStudy> {
    model.validate()?;
    if trials < 2 {
        return Err(domain("at least two trials are required"));
    }
    let (windows, t) = match design {
        WindowDesign::SingleWindow { t } => (1, t),
        WindowDesign::ManyWindows { windows, t } => (windows, t),
    };
    check_positive("t", t)?;
    if windows == 0 {
        return Err(domain("windows must be >= 1"));
    }
    let exposure = t * f64::from(windows);
    let rates = run_trials(trials, rng_seed, workers, |rng| {
        model.sample_windows(t, windows, rng) as f64 / exposure
    });
    Ok(summarize(&rates))
}

fn summarize(xs: &[f64]) -> VarianceStudy {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    let variance = m2 / (n - 1.0);
    let mu2 = m2 / n;
    let mu4 = m4 / n;
    let var_of_var = ((mu4 - mu2 * mu2 * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    VarianceStudy {
        trials: xs.len(),
        mean,
        variance,
        mean_se: (variance / n).sqrt(),
        variance_se: var_of_var.sqrt(),
    }
}
