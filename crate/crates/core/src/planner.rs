//! Operational helpers: the interruption-rate KPI, ranking of slices by
//! p-value, and how long to collect data before deciding.

use crate::error::{check_positive, check_probability_open, domain, Error, Result};
use crate::process::{CountObservation, ProcessModel};
use crate::rate_test::{rate_test_p_value, RateTestInput};
use crate::tradeoff::{ClosedForm, NullSwap, Scenario};
use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg};

/// VM-days in 100 VM-years of 365 days.
pub const AIR_UNIT_DAYS: f64 = 36_500.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirObservation {
    pub interruptions: u64,
    /// Up-time in VM-days; down-time is excluded.
    pub uptime: f64,
}

/// Interruptions per 100 VM-years of up-time.
pub fn air(obs: &AirObservation) -> Result<f64> {
    check_positive("uptime", obs.uptime)?;
    Ok(obs.interruptions as f64 * AIR_UNIT_DAYS / obs.uptime)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub id: String,
    pub observation: CountObservation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSlice {
    pub id: String,
    pub p_value: f64,
    pub rate: f64,
}

/// Tests every slice against `reference` and orders them most suspicious first:
/// ascending p-value, then descending event rate, then id.
pub fn rank_slices(slices: &[Slice], reference: &CountObservation) -> Result<Vec<RankedSlice>> {
    check_positive("reference exposure", reference.exposure)?;
    let mut ranked = slices
        .iter()
        .map(|s| {
            check_positive("slice exposure", s.observation.exposure)?;
            let input = RateTestInput {
                control: *reference,
                treatment: s.observation,
            };
            Ok(RankedSlice {
                id: s.id.clone(),
                p_value: rate_test_p_value(&input),
                rate: s.observation.rate(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| {
        a.p_value
            .total_cmp(&b.p_value)
            .then(b.rate.total_cmp(&a.rate))
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(ranked)
}

/// Process family of a plan, without its rate parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PlanFamily {
    Poisson,
    DetCompound { batch: u32 },
    BinomCompound { tosses: u32, head_prob: f64 },
    /// Gamma shape `m`; the mixing rate follows from the baseline as `θ = m / λ`
    /// and the effect is read as `δθ`.
    NegBinomial { shape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "snake_case")]
pub enum PlanDesign {
    /// One window per group; search its length.
    GrowWindow,
    /// Windows of fixed length per group; search their number.
    GrowIntervals { interval_length: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub baseline_rate: f64,
    pub effect: f64,
    pub target_fpr: f64,
    pub target_fnr: f64,
    pub family: PlanFamily,
    pub design: PlanDesign,
}

impl PlanRequest {
    pub fn validate(&self) -> Result<()> {
        check_positive("baseline_rate", self.baseline_rate)?;
        check_positive("effect", self.effect)?;
        check_probability_open("target_fpr", self.target_fpr)?;
        check_probability_open("target_fnr", self.target_fnr)?;
        if let PlanDesign::GrowIntervals { interval_length } = self.design {
            check_positive("interval_length", interval_length)?;
        }
        if let PlanFamily::NegBinomial { shape } = self.family {
            check_positive("shape", shape)?;
            let theta = shape / self.baseline_rate;
            if self.effect >= theta {
                return Err(domain(format!(
                    "effect (delta theta) must be below theta = {theta}"
                )));
            }
        }
        self.scenario(1.0, 1)?.validate()
    }

    /// Scenario with `windows` windows of length `t` in each group.
    pub fn scenario(&self, t: f64, windows: u32) -> Result<Scenario> {
        let (rate, delta) = (self.baseline_rate, self.effect);
        let mut s = match self.family {
            PlanFamily::Poisson => Scenario::poisson(rate, delta, t, t),
            PlanFamily::DetCompound { batch } => Scenario::det_compound(rate, delta, batch, t, t),
            PlanFamily::BinomCompound { tosses, head_prob } => {
                Scenario::binom_compound(rate, delta, tosses, head_prob, t, t)
            }
            PlanFamily::NegBinomial { shape } => {
                Scenario::negative_binomial(shape, shape / rate, delta, t, windows, windows)
            }
        };
        s.windows0 = windows;
        s.windows1 = windows;
        Ok(s)
    }
}

/// One evaluated design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    /// Window length (grow-window) or window count (grow-intervals).
    pub value: f64,
    pub alpha_hat: f64,
    pub alpha: f64,
    pub beta: f64,
    pub meets_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub request: PlanRequest,
    /// Recommended window length (grow-window) or per-window length (grow-intervals).
    pub window_length: f64,
    /// Recommended windows per group.
    pub intervals: u32,
    /// Total exposure per group.
    pub exposure_per_group: f64,
    pub achieved_alpha_hat: f64,
    pub achieved_alpha: f64,
    pub achieved_beta: f64,
    pub trace: Vec<Probe>,
}

/// Best operating point with realized false positive rate at most `target_fpr`:
/// the largest threshold whose realized `α` stays within target.
pub fn calibrated_point(scenario: &Scenario, target_fpr: f64) -> Result<(f64, f64, f64)> {
    let cf = ClosedForm::new(scenario, NullSwap::Binomial)?;
    let (mut lo, mut hi) = (1e-12, 1.0 - 1e-12);
    if cf.alpha(hi)? <= target_fpr {
        lo = hi;
    } else {
        // α(α̂) <= α̂, so α(target) is within target
        lo = lo.max(target_fpr);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if cf.alpha(mid)? <= target_fpr {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    Ok((lo, cf.alpha(lo)?, cf.beta(lo)?))
}

/// Large-window limit of the calibrated false negative rate for the
/// Gamma-mixed family with one window per group.
///
/// As windows grow the test reduces to comparing `U = L1 / (L0 + L1)` with a
/// fixed cut; under equal rates `U ~ Beta(m, m)`.
pub fn negbinomial_plateau(shape: f64, theta: f64, delta_theta: f64, target_fpr: f64) -> Result<f64> {
    check_positive("shape", shape)?;
    check_positive("theta", theta)?;
    check_probability_open("target_fpr", target_fpr)?;
    let theta1 = theta - delta_theta;
    check_positive("theta - delta_theta", theta1)?;
    let u = inv_beta_reg(shape, shape, 1.0 - target_fpr);
    let r = u * theta1 / ((1.0 - u) * theta);
    Ok(beta_reg(shape, shape, r / (1.0 + r)))
}

const MAX_DOUBLINGS: u32 = 40;

/// Smallest design meeting both targets, searched by doubling then bisection
/// on closed-form error rates.
pub fn time_to_wait(req: &PlanRequest) -> Result<PlanReport> {
    req.validate()?;
    if let (PlanFamily::NegBinomial { shape }, PlanDesign::GrowWindow) = (req.family, req.design) {
        let plateau = negbinomial_plateau(shape, shape / req.baseline_rate, req.effect, req.target_fpr)?;
        if req.target_fnr <= plateau {
            return Err(Error::Infeasible {
                reason: format!(
                    "false negative rate cannot fall below {plateau:.4} however long the window; \
                     use grow-intervals"
                ),
            });
        }
    }
    let mut trace = Vec::new();
    let mut probe = |value: f64| -> Result<Probe> {
        let s = match req.design {
            PlanDesign::GrowWindow => req.scenario(value, 1)?,
            PlanDesign::GrowIntervals { interval_length } => req.scenario(interval_length, value as u32)?,
        };
        let (alpha_hat, alpha, beta) = calibrated_point(&s, req.target_fpr)?;
        let p = Probe {
            value,
            alpha_hat,
            alpha,
            beta,
            meets_target: beta <= req.target_fnr,
        };
        trace.push(p);
        Ok(p)
    };
    let (value, best) = match req.design {
        PlanDesign::GrowWindow => {
            let mean_rate = req.scenario(1.0, 1)?.control.mean_rate();
            let mut hi = 1.0 / mean_rate;
            let mut best = probe(hi)?;
            let mut lo = 0.0;
            if best.meets_target {
                for _ in 0..MAX_DOUBLINGS {
                    let p = probe(hi / 2.0)?;
                    if !p.meets_target {
                        lo = hi / 2.0;
                        break;
                    }
                    hi /= 2.0;
                    best = p;
                }
            } else {
                let mut found = false;
                for _ in 0..MAX_DOUBLINGS {
                    lo = hi;
                    hi *= 2.0;
                    best = probe(hi)?;
                    if best.meets_target {
                        found = true;
                        break;
                    }
                }
                if !found {
                    return Err(not_reached(hi));
                }
            }
            while hi - lo > 1e-3 * hi {
                let mid = 0.5 * (lo + hi);
                let p = probe(mid)?;
                if p.meets_target {
                    hi = mid;
                    best = p;
                } else {
                    lo = mid;
                }
            }
            (hi, best)
        }
        PlanDesign::GrowIntervals { .. } => {
            let mut hi = 1u32;
            let mut best = probe(1.0)?;
            let mut lo = 0u32;
            while !best.meets_target {
                if hi >= 1 << MAX_DOUBLINGS.min(20) {
                    return Err(not_reached(f64::from(hi)));
                }
                lo = hi;
                hi *= 2;
                best = probe(f64::from(hi))?;
            }
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                let p = probe(f64::from(mid))?;
                if p.meets_target {
                    hi = mid;
                    best = p;
                } else {
                    lo = mid;
                }
            }
            (f64::from(hi), best)
        }
    };
    let (window_length, intervals) = match req.design {
        PlanDesign::GrowWindow => (value, 1),
        PlanDesign::GrowIntervals { interval_length } => (interval_length, value as u32),
    };
    Ok(PlanReport {
        request: *req,
        window_length,
        intervals,
        exposure_per_group: window_length * f64::from(intervals),
        achieved_alpha_hat: best.alpha_hat,
        achieved_alpha: best.alpha,
        achieved_beta: best.beta,
        trace,
    })
}

fn not_reached(last: f64) -> Error {
    Error::Infeasible {
        reason: format!("targets not met up to a design value of {last}"),
    }
}

/// Model of the control group implied by a plan request.
pub fn baseline_model(req: &PlanRequest) -> Result<ProcessModel> {
    Ok(req.scenario(1.0, 1)?.control)
}
