//! Random environment: the seeded portable stream, decibel conversion, and
//! the Poisson / uniform-dB SNR draws every stochastic path is built on.
//!
//! Reproducibility contract: all randomness flows through [`Stream`], a
//! ChaCha12 generator keyed from the config seed. Draw algorithms are written
//! out here (53-bit uniform conversion, Poisson CDF inversion) instead of
//! delegated, so a fixed seed replays the identical sequence on every
//! platform and in every future build. Parallel callers derive disjoint
//! sub-streams by id rather than sharing a generator.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::model::EnvironmentParams;

/// Converts an SNR in dB to a linear power ratio: `10^(db/10)`.
pub fn db_to_linear(gamma_db: f64) -> f64 {
    10f64.powf(gamma_db / 10.0)
}

/// Converts a linear SNR ratio back to dB.
pub fn linear_to_db(gamma: f64) -> f64 {
    10.0 * gamma.log10()
}

/// An explicitly seeded random stream.
///
/// Every sampling operation takes a `&mut Stream`, so concurrent callers each
/// own an independent stream and there is no hidden shared state.
#[derive(Debug, Clone)]
pub struct Stream(ChaCha12Rng);

impl Stream {
    /// Root stream for a seed (stream id 0).
    pub fn from_seed(seed: u64) -> Self {
        Stream(ChaCha12Rng::seed_from_u64(seed))
    }

    /// Sub-stream `stream_id` of a seed. Distinct ids yield statistically
    /// independent sequences, which is what lets episodes run in parallel
    /// while staying order-independent.
    pub fn derived(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Stream(rng)
    }

    /// Uniform draw in [0, 1) with 53-bit resolution: the top 53 bits of one
    /// 64-bit output, scaled by 2^-53.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in [lo, hi). A degenerate interval returns `lo`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// One Poisson(lambda) local-user count draw.
///
/// CDF inversion on a single uniform: walk the pmf recurrence
/// `p(k+1) = p(k) * lambda / (k+1)` until the cumulative mass passes the
/// draw. Large means are composed of independent fixed-size blocks so
/// `exp(-lambda)` never underflows; the composition is exact in
/// distribution.
pub fn sample_local_users(lambda: f64, rng: &mut Stream) -> u64 {
    debug_assert!(lambda > 0.0, "Poisson mean must be positive");
    let mut remaining = lambda;
    let mut total = 0u64;
    while remaining > POISSON_BLOCK {
        total += poisson_inverse(POISSON_BLOCK, rng.uniform());
        remaining -= POISSON_BLOCK;
    }
    total + poisson_inverse(remaining, rng.uniform())
}

const POISSON_BLOCK: f64 = 500.0;

fn poisson_inverse(lambda: f64, u: f64) -> u64 {
    let mut k = 0u64;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    // Cap far beyond any mass the draw can reach; guards against u landing in
    // accumulated rounding slack at the extreme tail.
    let cap = (lambda + 60.0 * lambda.sqrt() + 1000.0) as u64;
    while u >= cdf && k < cap {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k
}

/// One SNR draw: uniform over the configured dB interval, returned as a
/// linear ratio.
pub fn sample_snr(env: &EnvironmentParams, rng: &mut Stream) -> f64 {
    db_to_linear(rng.uniform_in(env.snr_low_db, env.snr_high_db))
}

/// `Pr{N <= k}` for `N ~ Poisson(lambda)`, by summed pmf with the stable
/// multiplicative recurrence. Returns 0 for negative `k`. The summation stops
/// early once additional terms can no longer move the double-precision sum.
pub fn poisson_cdf(k: i64, lambda: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let mut pmf = (-lambda).exp();
    let mut sum = pmf;
    let mut i = 1i64;
    while i <= k {
        pmf *= lambda / i as f64;
        sum += pmf;
        if pmf < 1e-300 && i as f64 > lambda {
            break;
        }
        i += 1;
    }
    sum.min(1.0)
}

/// `Pr{N = k}` for `N ~ Poisson(lambda)`, by the same recurrence.
pub fn poisson_pmf(k: u64, lambda: f64) -> f64 {
    let mut pmf = (-lambda).exp();
    for i in 1..=k {
        pmf *= lambda / i as f64;
    }
    pmf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(lo: f64, hi: f64) -> EnvironmentParams {
        EnvironmentParams {
            total_bandwidth_w: 30.0,
            local_user_mean_lambda: 8.0,
            snr_low_db: lo,
            snr_high_db: hi,
        }
    }

    #[test]
    fn db_identity_points() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert_eq!(db_to_linear(10.0), 10.0);
        let g = db_to_linear(22.0);
        assert!((g - 158.489319246111).abs() < 1e-9, "got {g}");
    }

    #[test]
    fn db_decade_shift() {
        for i in 0..200 {
            let a = -40.0 + i as f64 * 0.37;
            let lhs = db_to_linear(a + 10.0);
            let rhs = 10.0 * db_to_linear(a);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs(), "a={a}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn db_strictly_increasing() {
        let mut prev = db_to_linear(-30.0);
        for i in 1..=600 {
            let cur = db_to_linear(-30.0 + i as f64 * 0.1);
            assert!(cur > prev);
            prev = cur;
        }
    }

    #[test]
    fn poisson_cdf_empty_and_total() {
        assert_eq!(poisson_cdf(-1, 8.0), 0.0);
        assert!(poisson_cdf(400, 8.0) > 1.0 - 1e-12);
    }

    #[test]
    fn poisson_cdf_frozen_value() {
        // Sum of Poisson(8) pmf terms k = 0..8, computed independently with
        // 30-digit arithmetic.
        let v = poisson_cdf(8, 8.0);
        assert!((v - 0.592547341437591).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn poisson_cdf_monotone_in_k_and_lambda() {
        for k in 0..40 {
            assert!(poisson_cdf(k + 1, 8.0) >= poisson_cdf(k, 8.0));
        }
        let mut prev = poisson_cdf(5, 0.5);
        for i in 1..60 {
            let lam = 0.5 + i as f64 * 0.5;
            let cur = poisson_cdf(5, lam);
            assert!(cur <= prev, "cdf increased at lambda={lam}");
            prev = cur;
        }
    }

    #[test]
    fn poisson_empirical_mean_matches() {
        let mut rng = Stream::from_seed(11);
        let n = 1_000_000u64;
        let total: u64 = (0..n).map(|_| sample_local_users(8.0, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 8.0).abs() < 0.01, "empirical mean {mean}");
    }

    #[test]
    fn poisson_degenerate_small_lambda() {
        let mut rng = Stream::from_seed(7);
        for _ in 0..10_000 {
            assert_eq!(sample_local_users(1e-12, &mut rng), 0);
        }
    }

    #[test]
    fn poisson_empirical_cdf_matches_analytic() {
        let mut rng = Stream::from_seed(23);
        let n = 200_000u64;
        let hits = (0..n)
            .filter(|_| sample_local_users(8.0, &mut rng) <= 8)
            .count() as f64;
        let freq = hits / n as f64;
        assert!((freq - 0.5925473).abs() < 0.005, "empirical cdf {freq}");
    }

    #[test]
    fn poisson_large_lambda_composition() {
        let mut rng = Stream::from_seed(5);
        let n = 20_000u64;
        let lambda = 1250.0;
        let total: u64 = (0..n).map(|_| sample_local_users(lambda, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        // sd of the mean is sqrt(1250/20000) = 0.25
        assert!((mean - lambda).abs() < 1.0, "empirical mean {mean}");
    }

    #[test]
    fn snr_samples_stay_in_range() {
        let e = env(9.0, 22.0);
        let lo = db_to_linear(9.0);
        let hi = db_to_linear(22.0);
        let mut rng = Stream::from_seed(3);
        for _ in 0..100_000 {
            let g = sample_snr(&e, &mut rng);
            assert!(g >= lo && g <= hi);
        }
    }

    #[test]
    fn snr_degenerate_interval_is_constant() {
        let e = env(12.0, 12.0);
        let mut rng = Stream::from_seed(4);
        let expect = db_to_linear(12.0);
        for _ in 0..100 {
            assert_eq!(sample_snr(&e, &mut rng), expect);
        }
    }

    #[test]
    fn snr_db_mean_is_interval_midpoint() {
        let mut rng = Stream::from_seed(19);
        let n = 1_000_000;
        let sum: f64 = (0..n).map(|_| rng.uniform_in(9.0, 22.0)).sum();
        let mean = sum / n as f64;
        assert!((mean - 15.5).abs() < 0.02, "dB mean {mean}");
    }

    #[test]
    fn streams_replay_and_diverge() {
        let a: Vec<u64> = {
            let mut s = Stream::derived(42, 7);
            (0..32).map(|_| sample_local_users(8.0, &mut s)).collect()
        };
        let b: Vec<u64> = {
            let mut s = Stream::derived(42, 7);
            (0..32).map(|_| sample_local_users(8.0, &mut s)).collect()
        };
        let c: Vec<u64> = {
            let mut s = Stream::derived(42, 8);
            (0..32).map(|_| sample_local_users(8.0, &mut s)).collect()
        };
        assert_eq!(a, b, "same seed and stream id must replay");
        assert_ne!(a, c, "sibling streams must diverge");
    }
}
