//! Risk estimates: a failure probability with estimator provenance.

use serde::{Deserialize, Serialize};

/// How a risk value was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    /// Closed-form evaluation of the failure probability.
    Analytic,
    /// Empirical frequency over seeded draws.
    MonteCarlo,
}

/// A failure probability in [0, 1] with its estimator provenance and, for
/// Monte Carlo estimates, a 95% binomial confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    pub method: RiskMethod,
    /// 95% confidence half-width; exactly 0 for analytic estimates.
    pub half_width: f64,
    /// Sample count behind the estimate; 0 for analytic estimates.
    pub samples: u64,
}

impl RiskEstimate {
    /// Wraps a closed-form probability, clamped into [0, 1] so inversion
    /// formulas evaluated at overflow edges still produce a valid estimate.
    pub fn analytic(value: f64) -> Self {
        RiskEstimate {
            value: value.clamp(0.0, 1.0),
            method: RiskMethod::Analytic,
            half_width: 0.0,
            samples: 0,
        }
    }

    /// Wraps an empirical frequency of `hits` over `samples` draws.
    pub fn monte_carlo(hits: u64, samples: u64) -> Self {
        let value = hits as f64 / samples as f64;
        RiskEstimate {
            value,
            method: RiskMethod::MonteCarlo,
            half_width: 1.96 * (value * (1.0 - value) / samples as f64).sqrt(),
            samples,
        }
    }
}
