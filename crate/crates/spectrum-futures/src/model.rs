//! Domain types for the spectrum market: environment, owner, requester and
//! negotiation parameters, the composed validated configuration, and the
//! negotiated forward contract.
//!
//! All types are immutable value objects after construction. Configurations
//! load from JSON with exactly the field names below; unknown fields are
//! rejected so typos cannot silently fall back to defaults.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ConfigViolation, Error, Result};
use crate::risk::RiskEstimate;

/// Shared spectrum environment: total bandwidth, the local-user count
/// distribution, and the SNR distribution seen by the requester.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentParams {
    /// Total spectrum bandwidth W (MHz).
    pub total_bandwidth_w: f64,
    /// Mean of the Poisson-distributed local-user count.
    pub local_user_mean_lambda: f64,
    /// Lower bound of the uniform SNR distribution (dB).
    pub snr_low_db: f64,
    /// Upper bound of the uniform SNR distribution (dB).
    pub snr_high_db: f64,
}

/// Spectrum-owner economics and risk posture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OwnerParams {
    /// Revenue weight per served local user (currency/user).
    pub c1: f64,
    /// Degradation-cost weight (currency per MHz of per-user shortfall).
    pub c2: f64,
    /// Required per-user throughput, in bandwidth-equivalent MHz.
    pub b_req: f64,
    /// Local spectral efficiency scaling spectrum into throughput.
    pub k_c: f64,
    /// Owner risk ratio threshold, in (0, 1): utility at or below this
    /// fraction of its mean counts as a failure.
    pub rho_b: f64,
    /// Owner risk tolerance T_b in [0, 1].
    pub t_b: f64,
    /// Minimum asking price (currency/MHz).
    pub p_min: f64,
}

/// Spectrum-requester economics and risk posture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequesterParams {
    /// Revenue weight on the log-rate term.
    pub omega: f64,
    /// Target bit-error-rate, in (0, 0.2).
    pub ber_target: f64,
    /// Relative risk margin. Retained for traceability; the default risk
    /// path uses the absolute margin `delta_d` instead (the relative form
    /// divides by a zero minimum utility).
    pub rho_d: f64,
    /// Requester risk tolerance T_d in [0, 1].
    pub t_d: f64,
    /// Absolute utility margin (currency): a realized utility at or below
    /// this margin above the zero floor counts as a failure.
    pub delta_d: f64,
}

/// Mechanics of the iterative price negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NegotiationParams {
    /// Price increment per round (currency/MHz).
    pub price_step: f64,
    /// Grid resolution for trading amounts (MHz).
    pub amount_step: f64,
    /// Cap on the number of price rounds.
    pub max_iterations: u64,
}

/// One validated record holding every environment, owner, requester and
/// negotiation parameter plus the Monte Carlo budget and RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub environment: EnvironmentParams,
    pub owner: OwnerParams,
    pub requester: RequesterParams,
    pub negotiation: NegotiationParams,
    /// Monte Carlo sample count used by the sampling risk estimators.
    pub mc_samples: u64,
    /// Seed for all random streams derived during a run.
    pub seed: u64,
}

const PAPER_DEFAULT_JSON: &str = include_str!("../fixtures/paper_default.json");

impl MarketConfig {
    /// The bundled reference configuration: W = 30 MHz, Poisson(8) local
    /// users, SNR uniform over 9-22 dB, T_b = 0.2, plus the documented
    /// defaults for the free parameters.
    pub fn paper_default() -> Self {
        serde_json::from_str(PAPER_DEFAULT_JSON).expect("bundled default config must parse")
    }

    /// Parses a config from JSON text. Unknown fields are rejected; the
    /// parsed record is validated before being returned.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: MarketConfig = serde_json::from_str(text)?;
        config.validated()
    }

    /// Loads and validates a config file.
    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    fn validated(self) -> Result<Self> {
        match self.validate() {
            Ok(()) => Ok(self),
            Err(violations) => Err(Error::Config(violations)),
        }
    }

    /// Checks every invariant, reporting all violations with their field
    /// names rather than stopping at the first.
    pub fn validate(&self) -> std::result::Result<(), Vec<ConfigViolation>> {
        let mut v = Violations::default();

        let env = &self.environment;
        v.finite("environment.total_bandwidth_w", env.total_bandwidth_w);
        v.finite("environment.local_user_mean_lambda", env.local_user_mean_lambda);
        v.finite("environment.snr_low_db", env.snr_low_db);
        v.finite("environment.snr_high_db", env.snr_high_db);
        v.require(
            "environment.total_bandwidth_w",
            env.total_bandwidth_w > 0.0,
            "must be > 0",
        );
        v.require(
            "environment.local_user_mean_lambda",
            env.local_user_mean_lambda > 0.0,
            "must be > 0",
        );
        v.require(
            "environment.snr_low_db",
            env.snr_low_db < env.snr_high_db,
            "must be below snr_high_db",
        );

        let owner = &self.owner;
        v.finite("owner.c1", owner.c1);
        v.finite("owner.c2", owner.c2);
        v.finite("owner.b_req", owner.b_req);
        v.finite("owner.k_c", owner.k_c);
        v.finite("owner.rho_b", owner.rho_b);
        v.finite("owner.t_b", owner.t_b);
        v.finite("owner.p_min", owner.p_min);
        v.require("owner.c1", owner.c1 >= 0.0, "must be >= 0");
        v.require("owner.c2", owner.c2 >= 0.0, "must be >= 0");
        v.require("owner.b_req", owner.b_req > 0.0, "must be > 0");
        v.require("owner.k_c", owner.k_c > 0.0, "must be > 0");
        v.require(
            "owner.rho_b",
            owner.rho_b > 0.0 && owner.rho_b < 1.0,
            "must lie strictly between 0 and 1",
        );
        v.require(
            "owner.t_b",
            (0.0..=1.0).contains(&owner.t_b),
            "must lie in [0, 1]",
        );
        v.require("owner.p_min", owner.p_min >= 0.0, "must be >= 0");

        let req = &self.requester;
        v.finite("requester.omega", req.omega);
        v.finite("requester.ber_target", req.ber_target);
        v.finite("requester.rho_d", req.rho_d);
        v.finite("requester.t_d", req.t_d);
        v.finite("requester.delta_d", req.delta_d);
        v.require("requester.omega", req.omega > 0.0, "must be > 0");
        v.require(
            "requester.ber_target",
            req.ber_target > 0.0 && req.ber_target < 0.2,
            "must lie strictly between 0 and 0.2",
        );
        v.require("requester.rho_d", req.rho_d >= 0.0, "must be >= 0");
        v.require(
            "requester.t_d",
            (0.0..=1.0).contains(&req.t_d),
            "must lie in [0, 1]",
        );
        v.require("requester.delta_d", req.delta_d >= 0.0, "must be >= 0");

        let neg = &self.negotiation;
        v.finite("negotiation.price_step", neg.price_step);
        v.finite("negotiation.amount_step", neg.amount_step);
        v.require("negotiation.price_step", neg.price_step > 0.0, "must be > 0");
        v.require(
            "negotiation.amount_step",
            neg.amount_step > 0.0,
            "must be > 0",
        );
        v.require(
            "negotiation.max_iterations",
            neg.max_iterations >= 1,
            "must be >= 1",
        );

        v.require("mc_samples", self.mc_samples >= 1, "must be >= 1");

        if v.0.is_empty() {
            Ok(())
        } else {
            Err(v.0)
        }
    }

    /// SHA-256 of the canonical JSON serialization, recorded in experiment
    /// outputs so results are traceable to the exact configuration.
    pub fn digest(&self) -> String {
        let canonical =
            serde_json::to_string(self).expect("market config always serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Default)]
struct Violations(Vec<ConfigViolation>);

impl Violations {
    fn require(&mut self, field: &str, ok: bool, message: &str) {
        if !ok {
            self.0.push(ConfigViolation {
                field: field.to_string(),
                message: message.to_string(),
            });
        }
    }

    fn finite(&mut self, field: &str, value: f64) {
        if !value.is_finite() {
            self.0.push(ConfigViolation {
                field: field.to_string(),
                message: "must be a finite number".to_string(),
            });
        }
    }
}

/// The negotiated forward contract: the agreed price and amount, together
/// with the analytic risk estimates that justified signing it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardContract {
    /// Agreed price (currency/MHz); never below the owner's minimum.
    pub price: f64,
    /// Agreed trading amount (MHz), on the negotiation grid within [0, W].
    pub amount: f64,
    /// Owner-side failure risk at the agreed terms.
    pub owner_risk: RiskEstimate,
    /// Requester-side failure risk at the agreed terms.
    pub requester_risk: RiskEstimate,
}
