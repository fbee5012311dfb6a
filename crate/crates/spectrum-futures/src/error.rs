use std::fmt;

use thiserror::Error;

/// A single configuration-field violation, reported with the offending field
/// so callers can surface per-field verdicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", format_violations(.0))]
    Config(Vec<ConfigViolation>),

    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("domain error: {0}")]
    Domain(String),

    /// The owner's expected utility is non-positive at the probed price and
    /// amount; the ratio-based owner risk is undefined there. Contract-search
    /// layers treat this as "price/amount rejected", not as a failure.
    #[error("infeasible price/amount: owner expected utility {expected_utility} is not positive")]
    InfeasiblePrice { expected_utility: f64 },
}

fn format_violations(violations: &[ConfigViolation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
