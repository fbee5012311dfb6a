//! Requester-side economics: SNR-dependent spectral efficiency, realized
//! utility, its expectation over the SNR distribution, and the requester's
//! trading-failure risk with both an analytic and a Monte Carlo estimator.
//!
//! The minimum acceptable utility is zero (a requester never signs a
//! money-losing contract), so the failure event is the realized utility
//! falling to at most the absolute margin `delta_d` above that floor.

use crate::error::{Error, Result};
use crate::model::{EnvironmentParams, RequesterParams};
use crate::quadrature::mean_over_interval;
use crate::risk::RiskEstimate;
use crate::sampling::{db_to_linear, linear_to_db, sample_snr, Stream};

/// Adaptive-modulation constant `K = 1.5 / ln(0.2 / BER_target)`.
fn modulation_constant(requester: &RequesterParams) -> Result<f64> {
    let ber = requester.ber_target;
    if !(ber > 0.0 && ber < 0.2) {
        return Err(Error::Domain(format!(
            "ber_target {ber} outside (0, 0.2): spectral-efficiency constant undefined"
        )));
    }
    Ok(1.5 / (0.2 / ber).ln())
}

/// Requester spectral efficiency at a linear SNR: `log2(1 + K * gamma)`.
pub fn spectral_efficiency(requester: &RequesterParams, gamma: f64) -> Result<f64> {
    let k = modulation_constant(requester)?;
    if gamma <= 0.0 {
        return Err(Error::Domain(format!("SNR {gamma} must be positive")));
    }
    Ok((1.0 + k * gamma).log2())
}

/// Realized requester utility: log-rate revenue minus the payment.
pub fn requester_utility(
    requester: &RequesterParams,
    price: f64,
    amount: f64,
    gamma: f64,
) -> Result<f64> {
    if amount < 0.0 {
        return Err(Error::Domain(format!("trading amount {amount} must be >= 0")));
    }
    let k_d = spectral_efficiency(requester, gamma)?;
    Ok(requester.omega * (1.0 + k_d * amount).log2() - price * amount)
}

/// Expected requester utility over the uniform-dB SNR distribution, by
/// order-64 Gauss-Legendre quadrature over the dB interval.
pub fn requester_expected_utility(
    requester: &RequesterParams,
    env: &EnvironmentParams,
    price: f64,
    amount: f64,
) -> Result<f64> {
    if amount < 0.0 {
        return Err(Error::Domain(format!("trading amount {amount} must be >= 0")));
    }
    let k = modulation_constant(requester)?;
    let omega = requester.omega;
    Ok(mean_over_interval(env.snr_low_db, env.snr_high_db, |gamma_db| {
        let k_d = (1.0 + k * db_to_linear(gamma_db)).log2();
        omega * (1.0 + k_d * amount).log2() - price * amount
    }))
}

/// Analytic requester risk: `Pr{ U_d(gamma) <= delta_d }`.
///
/// The utility is strictly increasing in the SNR for a positive amount, so
/// the failure event inverts to `gamma <= gamma*` and the risk is the
/// uniform-dB CDF at the solved SNR, clamped into [0, 1]. With no purchase
/// the utility is identically zero, which never exceeds the margin.
pub fn requester_risk_analytic(
    requester: &RequesterParams,
    env: &EnvironmentParams,
    price: f64,
    amount: f64,
) -> Result<RiskEstimate> {
    let k = modulation_constant(requester)?;
    if amount < 0.0 {
        return Err(Error::Domain(format!("trading amount {amount} must be >= 0")));
    }
    if amount == 0.0 {
        return Ok(RiskEstimate::analytic(1.0));
    }
    // Spectral efficiency at which the utility exactly meets the margin.
    let k_d_star = ((price * amount + requester.delta_d) / requester.omega).exp2() - 1.0;
    if k_d_star <= 0.0 {
        return Ok(RiskEstimate::analytic(0.0));
    }
    let gamma_star = ((k_d_star / amount).exp2() - 1.0) / k;
    let gamma_star_db = linear_to_db(gamma_star);
    let cdf = (gamma_star_db - env.snr_low_db) / (env.snr_high_db - env.snr_low_db);
    Ok(RiskEstimate::analytic(cdf))
}

/// Monte Carlo requester risk: empirical frequency of `U_d <= delta_d` over
/// seeded SNR draws, with a binomial confidence half-width.
pub fn requester_risk_monte_carlo(
    requester: &RequesterParams,
    env: &EnvironmentParams,
    price: f64,
    amount: f64,
    samples: u64,
    rng: &mut Stream,
) -> Result<RiskEstimate> {
    let mut hits = 0u64;
    for _ in 0..samples {
        let gamma = sample_snr(env, rng);
        let u = requester_utility(requester, price, amount, gamma)?;
        if u <= requester.delta_d {
            hits += 1;
        }
    }
    Ok(RiskEstimate::monte_carlo(hits, samples))
}
