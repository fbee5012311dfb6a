//! Owner-side economics: realized utility, its Poisson expectation, and the
//! owner's trading-failure risk with both an analytic and a Monte Carlo
//! estimator.
//!
//! The utility is affine in the local-user count on `n_c >= 1` with slope
//! `c1 - c2 * b_req`; at `n_c = 0` there are no local users, so no service
//! revenue and no degradation cost, only the selling revenue `p * r_s`. The
//! analytic risk path solves the threshold inequality on the affine branch
//! and treats the `n_c = 0` atom separately, which keeps it in exact
//! agreement with the Monte Carlo estimator.

use crate::error::{Error, Result};
use crate::model::{EnvironmentParams, OwnerParams};
use crate::risk::RiskEstimate;
use crate::sampling::{sample_local_users, Stream};

/// Relative pmf mass left unaccumulated before the expectation sum stops.
const TAIL_BOUND: f64 = 1e-12;

fn check_amount(env: &EnvironmentParams, amount: f64) -> Result<()> {
    if !(0.0..=env.total_bandwidth_w).contains(&amount) {
        return Err(Error::Domain(format!(
            "trading amount {amount} outside [0, {}]",
            env.total_bandwidth_w
        )));
    }
    Ok(())
}

/// Realized owner utility for a given local-user count: service revenue plus
/// selling revenue minus the degradation cost of the spectrum given away.
pub fn owner_utility(
    owner: &OwnerParams,
    env: &EnvironmentParams,
    price: f64,
    amount: f64,
    n_c: u64,
) -> Result<f64> {
    check_amount(env, amount)?;
    if n_c == 0 {
        return Ok(price * amount);
    }
    let slope = owner.c1 - owner.c2 * owner.b_req;
    let base = price * amount + owner.c2 * owner.k_c * (env.total_bandwidth_w - amount);
    Ok(n_c as f64 * slope + base)
}

/// Expected owner utility over the Poisson local-user count, by direct pmf
/// summation truncated once the remaining tail mass is below `1e-12`.
pub fn owner_expected_utility(
    owner: &OwnerParams,
    env: &EnvironmentParams,
    price: f64,
    amount: f64,
) -> Result<f64> {
    check_amount(env, amount)?;
    let lambda = env.local_user_mean_lambda;
    let slope = owner.c1 - owner.c2 * owner.b_req;
    let base = price * amount + owner.c2 * owner.k_c * (env.total_bandwidth_w - amount);

    let mut pmf = (-lambda).exp();
    let mut covered = pmf;
    // n_c = 0 contributes selling revenue only.
    let mut expected = pmf * (price * amount);
    let cap = (lambda + 40.0 * lambda.sqrt() + 50.0) as u64;
    for k in 1..=cap {
        pmf *= lambda / k as f64;
        covered += pmf;
        expected += pmf * (k as f64 * slope + base);
        if 1.0 - covered < TAIL_BOUND {
            break;
        }
    }
    Ok(expected)
}

/// Analytic owner risk: `Pr{ U_b(n_c) <= rho_b * E[U_b] }`.
///
/// Errors with [`Error::InfeasiblePrice`] when the expected utility is not
/// positive, since the ratio threshold is meaningless at a non-positive
/// mean and a rational owner never trades there.
pub fn owner_risk_analytic(
    owner: &OwnerParams,
    env: &EnvironmentParams,
    price: f64,
    amount: f64,
) -> Result<RiskEstimate> {
    let expected = owner_expected_utility(owner, env, price, amount)?;
    if expected <= 0.0 {
        return Err(Error::InfeasiblePrice {
            expected_utility: expected,
        });
    }
    let lambda = env.local_user_mean_lambda;
    let threshold = owner.rho_b * expected;
    let slope = owner.c1 - owner.c2 * owner.b_req;
    let base = price * amount + owner.c2 * owner.k_c * (env.total_bandwidth_w - amount);

    let pmf0 = (-lambda).exp();
    let mut risk = if price * amount <= threshold { pmf0 } else { 0.0 };

    if slope > 0.0 {
        // Utility increases with n_c: failures are the small counts.
        let t = (threshold - base) / slope;
        if t >= 1.0 {
            let k_max = t.floor();
            risk += cdf_capped(k_max, lambda) - pmf0;
        }
    } else if slope < 0.0 {
        // Utility decreases with n_c: failures are the large counts.
        let t = (threshold - base) / slope;
        let k_min = t.ceil().max(1.0);
        risk += 1.0 - cdf_capped(k_min - 1.0, lambda);
    } else if base <= threshold {
        // Flat branch: every n_c >= 1 fails together.
        risk += 1.0 - pmf0;
    }
    Ok(RiskEstimate::analytic(risk))
}

fn cdf_capped(k: f64, lambda: f64) -> f64 {
    if k >= i64::MAX as f64 {
        1.0
    } else {
        crate::sampling::poisson_cdf(k as i64, lambda)
    }
}

/// Monte Carlo owner risk: empirical frequency of `U_b <= rho_b * E[U_b]`
/// over seeded local-user draws, with a binomial confidence half-width.
pub fn owner_risk_monte_carlo(
    owner: &OwnerParams,
    env: &EnvironmentParams,
    price: f64,
    amount: f64,
    samples: u64,
    rng: &mut Stream,
) -> Result<RiskEstimate> {
    let expected = owner_expected_utility(owner, env, price, amount)?;
    if expected <= 0.0 {
        return Err(Error::InfeasiblePrice {
            expected_utility: expected,
        });
    }
    let threshold = owner.rho_b * expected;
    let mut hits = 0u64;
    for _ in 0..samples {
        let n_c = sample_local_users(env.local_user_mean_lambda, rng);
        let u = owner_utility(owner, env, price, amount, n_c)?;
        if u <= threshold {
            hits += 1;
        }
    }
    Ok(RiskEstimate::monte_carlo(hits, samples))
}
