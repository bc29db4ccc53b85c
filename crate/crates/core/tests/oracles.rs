//! Exact-arithmetic and brute-force oracles for the floating-point paths.

use approx::assert_relative_eq;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use ratetest_core::dist::{DiscreteDist, NegBinomialParams, PoissonParams};
use ratetest_core::rate_test::p_value_from_counts;
use ratetest_core::tradeoff::{alpha_closed_form_detcompound, ClosedForm, NullSwap, Scenario};
use ratetest_core::{rate_test_p_value, RateTestInput};
use statrs::distribution::{Discrete, Poisson};

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, j| acc * BigInt::from(n - j) / BigInt::from(j + 1))
}

fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn upper_tail(n: u64, n1: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    (n1..=n).fold(BigRational::zero(), |acc, j| {
        acc + BigRational::from_integer(binomial(n, j))
            * num_traits::pow(p.clone(), j as usize)
            * num_traits::pow(q.clone(), (n - j) as usize)
    })
}

#[test]
fn p_value_matches_exact_tail_for_uneven_exposures() {
    // t0 = 4, t1 = 3  =>  p = 3/7
    let p = rational(3, 7);
    for n in [0u64, 1, 7, 31, 60] {
        for n1 in 0..=n {
            let got = rate_test_p_value(&RateTestInput::new(n - n1, 4.0, n1, 3.0).unwrap());
            let exact = upper_tail(n, n1, &p).to_f64().unwrap();
            assert!((got - exact).abs() <= 1e-13, "n={n} n1={n1}: {got} vs {exact}");
        }
    }
}

#[test]
fn tiny_p_values_keep_relative_accuracy() {
    let p = rational(1, 2);
    for (n, n1) in [(200u64, 190u64), (400, 399), (120, 110)] {
        let exact = upper_tail(n, n1, &p).to_f64().unwrap();
        assert_relative_eq!(p_value_from_counts(n1, n, 0.5), exact, max_relative = 1e-11);
    }
}

#[test]
fn negative_binomial_mass_matches_exact_integer_shape() {
    // m = 3, p = 2/5: C(k+2, k) p^3 (1-p)^k
    let dist = NegBinomialParams::new(3.0, 0.4).unwrap();
    let p = rational(2, 5);
    let q = rational(3, 5);
    for k in 0..80u64 {
        let exact = BigRational::from_integer(binomial(k + 2, k))
            * num_traits::pow(p.clone(), 3)
            * num_traits::pow(q.clone(), k as usize);
        assert_relative_eq!(dist.pmf(k), exact.to_f64().unwrap(), max_relative = 2e-13);
    }
}

/// Exact rejection decision: reject iff P(B(n, 1/2) >= n1) < alpha_hat, in rationals.
fn rejects_exactly(n1: u64, n: u64, alpha_hat: &BigRational) -> bool {
    let tail = (n1..=n).fold(BigInt::zero(), |acc, j| acc + binomial(n, j));
    BigRational::new(tail, BigInt::one() << n) < *alpha_hat
}

#[test]
fn closed_form_matches_brute_force_double_sum() {
    // equal windows, rates 1.5 and 2.5 over t = 2
    let scenario = Scenario::poisson(1.5, 1.0, 2.0, 2.0);
    let cf = ClosedForm::new(&scenario, NullSwap::Binomial).unwrap();
    let null = Poisson::new(3.0).unwrap();
    let alt = Poisson::new(5.0).unwrap();
    for (num, den) in [(1i64, 100i64), (5, 100), (1, 5), (1, 2)] {
        let alpha_hat = rational(num, den);
        let (mut alpha, mut beta) = (0.0, 0.0);
        for n0 in 0..60u64 {
            for n1 in 0..60u64 {
                if rejects_exactly(n1, n0 + n1, &alpha_hat) {
                    alpha += null.pmf(n0) * null.pmf(n1);
                } else {
                    beta += null.pmf(n0) * alt.pmf(n1);
                }
            }
        }
        let a = num as f64 / den as f64;
        assert!((cf.alpha(a).unwrap() - alpha).abs() < 1e-12, "alpha at {a}");
        assert!((cf.beta(a).unwrap() - beta).abs() < 1e-12, "beta at {a}");
    }
}

#[test]
fn det_compound_alpha_matches_enumeration() {
    // arrivals Poisson(λ t) per side, each carrying `batch` events
    let (lambda, batch, t) = (0.8, 3u64, 3.0);
    let arrivals = PoissonParams::new(lambda * t).unwrap();
    for alpha_hat in [0.02, 0.1, 0.3] {
        let mut alpha = 0.0;
        for a0 in 0..50u64 {
            for a1 in 0..50u64 {
                let (n0, n1) = (batch * a0, batch * a1);
                if p_value_from_counts(n1, n0 + n1, 0.5) < alpha_hat {
                    alpha += arrivals.pmf(a0) * arrivals.pmf(a1);
                }
            }
        }
        let got = alpha_closed_form_detcompound(lambda, batch as u32, t, t, alpha_hat).unwrap();
        assert!((got - alpha).abs() < 1e-12, "{alpha_hat}: {got} vs {alpha}");
    }
}

#[test]
fn scaled_rule_reproduces_poisson_curve() {
    let poisson = ClosedForm::new(&Scenario::poisson(0.7, 0.4, 6.0, 3.0), NullSwap::Binomial).unwrap();
    let det = ClosedForm::new(&Scenario::det_compound(0.7, 0.4, 4, 6.0, 3.0), NullSwap::Scaled { batch: 4 }).unwrap();
    for a in [0.01, 0.05, 0.2, 0.6] {
        assert!((poisson.beta(a).unwrap() - det.beta(a).unwrap()).abs() < 1e-12);
    }
}
