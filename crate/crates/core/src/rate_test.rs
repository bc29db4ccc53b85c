//! Exact conditional-binomial test for a rate regression.
//!
//! Given `n` events in total, the treatment count is `B(n, t1 / (t0 + t1))`
//! under equal rates, so the p-value of seeing `n1` or more treatment events
//! is a binomial upper tail.

use crate::dist::{inverse_survival, BinomialParams, DiscreteDist};
use crate::error::{check_probability_open, Error, Result};
use crate::process::CountObservation;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTestInput {
    pub control: CountObservation,
    pub treatment: CountObservation,
}

impl RateTestInput {
    pub fn new(n0: u64, t0: f64, n1: u64, t1: f64) -> Result<Self> {
        Ok(Self {
            control: CountObservation::new(n0, t0)?,
            treatment: CountObservation::new(n1, t1)?,
        })
    }

    pub fn total(&self) -> u64 {
        self.control.events + self.treatment.events
    }

    /// `t1 / (t0 + t1)`: treatment share of events under equal rates.
    pub fn null_head_prob(&self) -> f64 {
        null_head_prob(self.control.exposure, self.treatment.exposure)
    }

    /// Binomial law of the treatment count under the null, given the total.
    pub fn null_distribution(&self) -> BinomialParams {
        BinomialParams {
            n: self.total(),
            p: self.null_head_prob(),
        }
    }
}

/// `t1 / (t0 + t1)`.
pub fn null_head_prob(t0: f64, t1: f64) -> f64 {
    t1 / (t0 + t1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub p_value: f64,
    pub threshold_alpha: f64,
    pub reject: bool,
    pub conditional_n: u64,
    pub null_head_prob: f64,
}

/// `P(B(n, t1/(t0+t1)) >= n1)`; equals 1 when no events were seen.
pub fn rate_test_p_value(input: &RateTestInput) -> f64 {
    p_value_from_counts(input.treatment.events, input.total(), input.null_head_prob())
}

/// p-value from the treatment count `n1`, the total `n` and the null head probability.
pub fn p_value_from_counts(n1: u64, n: u64, head_prob: f64) -> f64 {
    debug_assert!(n1 <= n);
    BinomialParams { n, p: head_prob }.survival(n1 as i64 - 1)
}

/// Relative band around the threshold inside which a p-value counts as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `p < α̂`, except that p-values within `TIE_TOLERANCE` of `α̂` are ties and do not
/// reject. Exact ties (for instance `P(B(3, 1/2) >= 2) = 1/2`) come out of floating
/// point a few ulps either side of the threshold.
pub fn rejects(p_value: f64, alpha_hat: f64) -> bool {
    p_value < alpha_hat * (1.0 - TIE_TOLERANCE)
}

/// Runs the test at threshold `alpha_hat`; rejects when `p < alpha_hat`.
pub fn decide(input: &RateTestInput, alpha_hat: f64) -> Result<TestOutcome> {
    check_probability_open("alpha_hat", alpha_hat)?;
    let p_value = rate_test_p_value(input);
    Ok(TestOutcome {
        p_value,
        threshold_alpha: alpha_hat,
        reject: rejects(p_value, alpha_hat),
        conditional_n: input.total(),
        null_head_prob: input.null_head_prob(),
    })
}

/// Smallest treatment count rejected at `alpha_hat` given `n` total events,
/// or `n + 1` when nothing is rejected.
pub fn rejection_start(n: u64, head_prob: f64, alpha_hat: f64) -> u64 {
    let b = BinomialParams { n, p: head_prob };
    // φ(n1) = S(n1 - 1) is nonincreasing in n1
    let (mut lo, mut hi) = (0u64, n + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if rejects(b.survival(mid as i64 - 1), alpha_hat) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Checks that `null_swap` lives on `0..=n`.
pub fn check_swap_support(null_swap: &dyn DiscreteDist, n: u64) -> Result<()> {
    match null_swap.support_max() {
        // trailing zero masses are harmless
        Some(max) if max <= n || null_swap.survival(n as i64) == 0.0 => Ok(()),
        Some(max) => Err(Error::SupportMismatch {
            expected_max: n,
            found: format!("0..={max}"),
        }),
        None => Err(Error::SupportMismatch {
            expected_max: n,
            found: "unbounded support".into(),
        }),
    }
}

/// p-value of the test whose null law of the treatment count is replaced by `null_swap`:
/// `P(Z0 >= n1)`.
pub fn contorted_p_value(input: &RateTestInput, null_swap: &dyn DiscreteDist) -> Result<f64> {
    check_swap_support(null_swap, input.total())?;
    Ok(null_swap.survival(input.treatment.events as i64 - 1))
}

/// Threshold that targets a false positive rate `alpha` when the null law assumed by
/// the test is `null_design` but the data follow `null_true`:
/// `S_design(S_true^{-1}(alpha))`.
///
/// Between attainable tail values of `null_true` the smaller threshold is returned.
pub fn adjust_alpha_hat(
    alpha: f64,
    null_design: &dyn DiscreteDist,
    null_true: &dyn DiscreteDist,
) -> Result<f64> {
    check_probability_open("alpha", alpha)?;
    let k = inverse_survival(null_true, alpha)?;
    Ok(null_design.survival(k as i64))
}

/// Maps a p-value computed under `null_design` to the tail probability of the same
/// observation under `null_true`: `S_true(S_design^{-1}(p))`.
pub fn adjust_p_value(
    p_value: f64,
    null_design: &dyn DiscreteDist,
    null_true: &dyn DiscreteDist,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_value) {
        return Err(crate::error::domain(format!("p-value must lie in [0, 1], got {p_value}")));
    }
    if p_value >= 1.0 {
        return Ok(1.0);
    }
    if p_value == 0.0 {
        return Ok(0.0);
    }
    let k = inverse_survival(null_design, p_value)?;
    Ok(null_true.survival(k as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Scaled, Tabulated};

    #[test]
    fn exact_ties_do_not_reject() {
        // P(B(3, 1/2) >= 2) and P(B(5, 1/2) >= 3) are exactly 1/2
        for (n0, n1) in [(1, 2), (2, 3), (3, 4)] {
            let out = decide(&RateTestInput::new(n0, 1.0, n1, 1.0).unwrap(), 0.5).unwrap();
            assert!(!out.reject, "{n0} {n1}: {}", out.p_value);
            assert_eq!(rejection_start(n0 + n1, 0.5, 0.5), n1 + 1);
        }
    }

    fn input(n0: u64, t0: f64, n1: u64, t1: f64) -> RateTestInput {
        RateTestInput::new(n0, t0, n1, t1).unwrap()
    }

    #[test]
    fn p_value_examples() {
        assert!((rate_test_p_value(&input(2, 1.0, 8, 1.0)) - 56.0 / 1024.0).abs() < 1e-15);
        assert_eq!(rate_test_p_value(&input(7, 3.0, 0, 9.0)), 1.0);
        let p = rate_test_p_value(&input(0, 1.0, 5, 2.0));
        assert!((p - (2.0f64 / 3.0).powi(5)).abs() < 1e-15);
    }

    #[test]
    fn decide_examples() {
        assert!(!decide(&input(2, 1.0, 8, 1.0), 0.05).unwrap().reject);
        assert!(decide(&input(2, 1.0, 8, 1.0), 0.06).unwrap().reject);
        let o = decide(&input(0, 1.0, 0, 1.0), 0.3).unwrap();
        assert_eq!(o.p_value, 1.0);
        assert!(!o.reject);
        assert_eq!(o.conditional_n, 0);
        assert!(decide(&input(1, 1.0, 1, 1.0), 1.0).is_err());
        assert!(decide(&input(1, 1.0, 1, 1.0), 0.0).is_err());
    }

    #[test]
    fn zero_exposure_is_rejected() {
        assert!(RateTestInput::new(1, 0.0, 1, 1.0).is_err());
    }

    #[test]
    fn contorted_examples() {
        let i = input(2, 1.0, 8, 1.0);
        let same = contorted_p_value(&i, &i.null_distribution()).unwrap();
        assert_eq!(same, rate_test_p_value(&i));
        let u = contorted_p_value(&i, &Tabulated::uniform(10)).unwrap();
        assert!((u - 3.0 / 11.0).abs() < 1e-15);
        assert_eq!(contorted_p_value(&i, &Tabulated::point_mass(0)).unwrap(), 0.0);
        assert!(matches!(
            contorted_p_value(&i, &Tabulated::uniform(11)),
            Err(Error::SupportMismatch { .. })
        ));
    }

    #[test]
    fn rejection_start_agrees_with_decide() {
        for n in 0..30u64 {
            for &a in &[0.01, 0.05, 56.0 / 1024.0, 0.3] {
                let r = rejection_start(n, 0.5, a);
                for n1 in 0..=n {
                    let rej = decide(&input(n - n1, 1.0, n1, 1.0), a).unwrap().reject;
                    assert_eq!(rej, n1 >= r, "n={n} n1={n1} a={a}");
                }
            }
        }
    }

    #[test]
    fn adjust_identity_is_conservative() {
        let x = BinomialParams::new(10, 0.5).unwrap();
        for &a in &[0.01, 0.05, 0.2, 0.5] {
            assert!(adjust_alpha_hat(a, &x, &x).unwrap() <= a);
        }
        let attained = x.survival(7);
        assert_eq!(adjust_alpha_hat(attained, &x, &x).unwrap(), attained);
    }

    #[test]
    fn adjust_p_value_identity() {
        let x = BinomialParams::new(12, 0.4).unwrap();
        for k in 0..12 {
            let p = x.survival(k);
            assert_eq!(adjust_p_value(p, &x, &x).unwrap(), p);
        }
        let y = Scaled::new(BinomialParams::new(6, 0.4).unwrap(), 2).unwrap();
        assert_eq!(adjust_p_value(1.0, &x, &y).unwrap(), 1.0);
    }
}
