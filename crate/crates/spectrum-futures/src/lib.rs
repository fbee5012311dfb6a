//! Forward-contract spectrum trading between two service providers.
//!
//! A spectrum owner with total bandwidth `W` serves a Poisson-distributed
//! population of local users and can sell idle spectrum to an over-utilized
//! requester whose link quality is a uniformly distributed SNR. Both sides
//! face trading-failure risk from that randomness, so instead of striking a
//! deal on the spot they negotiate a forward contract in advance: the owner
//! sweeps an ascending price, each side computes the amount range it can
//! accept within its risk tolerance, and the owner finally signs the
//! requester-accepted pair maximizing its own expected utility.
//!
//! The crate provides:
//!
//! - [`model`]: validated market configuration and the contract type.
//! - [`sampling`]: the seeded portable random streams and the Poisson /
//!   uniform-dB SNR environment.
//! - [`owner`] / [`requester`]: utilities, expectations, and both risk
//!   estimators (closed form and Monte Carlo) for each side.
//! - [`negotiation`]: the iterative pricing sweep plus an exhaustive
//!   brute-force oracle used to cross-check it.
//! - [`onsite`]: a spot-market baseline with a posted clearing price and
//!   proportional rationing.
//! - [`experiments`]: seeded sweeps comparing the two schemes (failure
//!   probability, owner profit, price stability, fairness) with canonical
//!   CSV output.
//!
//! Determinism: every stochastic path draws from an explicitly seeded
//! ChaCha12 stream, parallel episodes derive disjoint sub-streams, and all
//! file output is formatted canonically, so a rerun with the same
//! configuration and seed is byte-identical.

pub mod csvfmt;
pub mod error;
pub mod experiments;
pub mod model;
pub mod negotiation;
pub mod onsite;
pub mod owner;
pub mod quadrature;
pub mod requester;
pub mod risk;
pub mod sampling;

pub use error::{ConfigViolation, Error, Result};
pub use experiments::{
    fairness, run_failure_curve, run_fairness_curve, run_price_series,
    run_profit_comparison, ExperimentId, ExperimentResult, MetricRow, Scheme, ShapeCheck,
};
pub use model::{
    EnvironmentParams, ForwardContract, MarketConfig, NegotiationParams, OwnerParams,
    RequesterParams,
};
pub use negotiation::{
    brute_force_negotiate, negotiate, owner_acceptable_range, requester_acceptable_range,
    requester_best_response, verify_contract, AmountRange, IterationRecord,
    NegotiationTrace, Termination,
};
pub use onsite::{
    available_spectrum, clear_onsite_market, episodes_to_csv, requester_demand,
    OnsiteEpisodeResult, OnsiteParams,
};
pub use owner::{
    owner_expected_utility, owner_risk_analytic, owner_risk_monte_carlo, owner_utility,
};
pub use requester::{
    requester_expected_utility, requester_risk_analytic, requester_risk_monte_carlo,
    requester_utility, spectral_efficiency,
};
pub use risk::{RiskEstimate, RiskMethod};
pub use sampling::{db_to_linear, poisson_cdf, sample_local_users, sample_snr, Stream};
