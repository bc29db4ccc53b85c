//! Exact conditional rate test for counts of events, with the models and
//! operating-characteristic machinery around it: Poisson, compound Poisson
//! and Gamma-mixed (negative binomial) point processes, closed-form and
//! Monte Carlo false-negative / false-positive curves, a negative-binomial
//! Wald test for comparison, and planning helpers.

pub mod dist;
pub mod error;
pub mod planner;
pub mod process;
pub mod rate_test;
pub mod sim;
pub mod tradeoff;
pub mod wald;

pub use dist::{
    inverse_cdf, inverse_survival, normal_survival, BinomialParams, DiscreteDist,
    NegBinomialParams, PoissonParams, Scaled, Tabulated, Truncation,
};
pub use error::{Error, Result};
pub use process::{
    count_in_window, count_pmf, estimate_rate, hazard_rate, interarrival_sample, mttf_censored,
    CensoredSample, CountDist, CountObservation, InterArrival, ProcessModel,
};
pub use rate_test::{decide, rate_test_p_value, rejects, RateTestInput, TestOutcome};
