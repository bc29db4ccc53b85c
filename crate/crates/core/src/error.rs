use thiserror::Error;

/// Errors raised by the rate-test library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A swapped null distribution does not live on `{0..=n}`.
    #[error("support mismatch: null distribution must be supported on 0..={expected_max}, got {found}")]
    SupportMismatch { expected_max: u64, found: String },

    /// The Wald variance estimate needs at least one event in every group.
    #[error("degenerate variance: group `{group}` has zero events")]
    DegenerateVariance { group: &'static str },

    /// A planning request cannot be met by the requested design.
    #[error("infeasible under single-window design: {reason}")]
    Infeasible { reason: String },

    /// An infinite sum did not reach its tail tolerance within the term cap.
    #[error("truncation cap of {max_terms} terms reached with {remaining:e} tail mass left")]
    TruncationCap { max_terms: usize, remaining: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn check_probability_open(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in (0, 1), got {value}")))
    }
}

pub(crate) fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(domain(format!("{name} must lie in [0, 1], got {value}")))
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be positive and finite, got {value}")))
    }
}
