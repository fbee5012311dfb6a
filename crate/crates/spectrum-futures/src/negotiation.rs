//! Iterative forward-contract negotiation.
//!
//! The owner announces prices in fixed increments starting from its minimum.
//! At each price both sides work out the amount range they can accept within
//! their risk tolerances; when the ranges overlap, the requester picks the
//! amount maximizing its expected utility. After the sweep the owner signs
//! the recorded candidate maximizing its own expected utility.
//!
//! [`brute_force_negotiate`] re-derives the same outcome by exhaustive
//! pointwise enumeration, with no interval machinery, and exists as the
//! equivalence oracle for [`negotiate`].
//!
//! Everything here is deterministic: risks are evaluated analytically, and
//! grid points are computed the same way on every path so comparisons are
//! exact.

use serde::{Deserialize, Serialize};

use crate::csvfmt::{csv_record, fmt_sig};
use crate::error::{Error, Result};
use crate::model::{ForwardContract, MarketConfig};
use crate::owner::{owner_expected_utility, owner_risk_analytic};
use crate::requester::{requester_expected_utility, requester_risk_analytic};
use crate::risk::RiskEstimate;

/// A contiguous range of grid-aligned trading amounts. An empty range is
/// expressed with `feasible = false`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmountRange {
    pub lower: f64,
    pub upper: f64,
    pub feasible: bool,
}

impl AmountRange {
    pub fn empty() -> Self {
        AmountRange {
            lower: 0.0,
            upper: 0.0,
            feasible: false,
        }
    }

    pub fn intersect(&self, other: &AmountRange) -> AmountRange {
        if !self.feasible || !other.feasible {
            return AmountRange::empty();
        }
        let lower = self.lower.max(other.lower);
        let upper = self.upper.min(other.upper);
        if lower <= upper {
            AmountRange {
                lower,
                upper,
                feasible: true,
            }
        } else {
            AmountRange::empty()
        }
    }
}

/// The amount grid: multiples of `amount_step` from zero up to the largest
/// multiple not exceeding the total bandwidth.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AmountGrid {
    step: f64,
    last_index: usize,
}

impl AmountGrid {
    pub(crate) fn new(total_bandwidth: f64, step: f64) -> Self {
        let mut last = (total_bandwidth / step).round();
        if last < 0.0 {
            last = 0.0;
        }
        while last > 0.0 && last * step > total_bandwidth {
            last -= 1.0;
        }
        AmountGrid {
            step,
            last_index: last as usize,
        }
    }

    pub(crate) fn for_config(config: &MarketConfig) -> Self {
        Self::new(
            config.environment.total_bandwidth_w,
            config.negotiation.amount_step,
        )
    }

    pub(crate) fn point(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    pub(crate) fn len(&self) -> usize {
        self.last_index + 1
    }

    pub(crate) fn index_of(&self, amount: f64) -> usize {
        (amount / self.step).round() as usize
    }
}

/// Termination cause of a negotiation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The ranges stopped overlapping after at least one overlap.
    NoOverlap,
    /// The price-round cap was reached.
    MaxIterations,
    /// The requester's range emptied before any overlap. Its risk only grows
    /// with price, so no later price can succeed either.
    NoFeasiblePrice,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::NoOverlap => "no_overlap",
            Termination::MaxIterations => "max_iterations",
            Termination::NoFeasiblePrice => "no_feasible_price",
        }
    }
}

/// One price round of the negotiation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub price: f64,
    pub owner_range: AmountRange,
    pub requester_range: AmountRange,
    pub overlap: AmountRange,
    /// The requester's chosen amount, when the ranges overlapped.
    pub requester_choice: Option<f64>,
    /// Expected requester utility at the chosen amount.
    pub requester_expected_utility: Option<f64>,
}

/// Full record of a negotiation: every price round, the signed contract if
/// one was reached, and why the sweep stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegotiationTrace {
    pub iterations: Vec<IterationRecord>,
    pub outcome: Option<ForwardContract>,
    pub termination: Termination,
}

impl NegotiationTrace {
    /// Line-per-iteration CSV with columns
    /// `price,owner_lo,owner_hi,req_lo,req_hi,choice,req_eu`.
    /// Infeasible ranges and absent choices leave their fields empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("price,owner_lo,owner_hi,req_lo,req_hi,choice,req_eu\n");
        for it in &self.iterations {
            let range_fields = |r: &AmountRange| {
                if r.feasible {
                    (fmt_sig(r.lower), fmt_sig(r.upper))
                } else {
                    (String::new(), String::new())
                }
            };
            let (olo, ohi) = range_fields(&it.owner_range);
            let (rlo, rhi) = range_fields(&it.requester_range);
            out.push_str(&csv_record(&[
                fmt_sig(it.price),
                olo,
                ohi,
                rlo,
                rhi,
                it.requester_choice.map(fmt_sig).unwrap_or_default(),
                it.requester_expected_utility
                    .map(fmt_sig)
                    .unwrap_or_default(),
            ]));
        }
        out
    }
}

/// Grid points the owner can accept at `price`: positive expected utility
/// and analytic risk within its tolerance. A non-contiguous feasible set is
/// reduced to the contiguous block around the owner's best point, since the
/// announced offer is a single range.
pub fn owner_acceptable_range(config: &MarketConfig, price: f64) -> Result<AmountRange> {
    let grid = AmountGrid::for_config(config);
    let mut feasible = vec![false; grid.len()];
    let mut utility = vec![f64::NEG_INFINITY; grid.len()];
    for i in 0..grid.len() {
        let amount = grid.point(i);
        match owner_risk_analytic(&config.owner, &config.environment, price, amount) {
            Ok(risk) if risk.value <= config.owner.t_b => {
                feasible[i] = true;
                utility[i] = owner_expected_utility(
                    &config.owner,
                    &config.environment,
                    price,
                    amount,
                )?;
            }
            Ok(_) => {}
            Err(Error::InfeasiblePrice { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(block_around_best(&grid, &feasible, &utility))
}

/// Grid points the requester can accept at `price`: analytic risk within its
/// tolerance, with the same contiguous-block reduction keyed to the
/// requester's expected utility.
pub fn requester_acceptable_range(config: &MarketConfig, price: f64) -> Result<AmountRange> {
    let grid = AmountGrid::for_config(config);
    let mut feasible = vec![false; grid.len()];
    let mut utility = vec![f64::NEG_INFINITY; grid.len()];
    for i in 0..grid.len() {
        let amount = grid.point(i);
        let risk =
            requester_risk_analytic(&config.requester, &config.environment, price, amount)?;
        if risk.value <= config.requester.t_d {
            feasible[i] = true;
            utility[i] = requester_expected_utility(
                &config.requester,
                &config.environment,
                price,
                amount,
            )?;
        }
    }
    Ok(block_around_best(&grid, &feasible, &utility))
}

/// Reduces a feasibility mask to the contiguous block containing the
/// highest-utility feasible point. Ties keep the smaller amount.
fn block_around_best(grid: &AmountGrid, feasible: &[bool], utility: &[f64]) -> AmountRange {
    let mut best: Option<usize> = None;
    for i in 0..feasible.len() {
        if feasible[i] && best.is_none_or(|b| utility[i] > utility[b]) {
            best = Some(i);
        }
    }
    let Some(best) = best else {
        return AmountRange::empty();
    };
    let mut lo = best;
    while lo > 0 && feasible[lo - 1] {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < feasible.len() && feasible[hi + 1] {
        hi += 1;
    }
    AmountRange {
        lower: grid.point(lo),
        upper: grid.point(hi),
        feasible: true,
    }
}

/// The requester's choice inside a non-empty overlap: the grid point
/// maximizing its expected utility, ties toward the smaller amount.
pub fn requester_best_response(
    config: &MarketConfig,
    price: f64,
    overlap: &AmountRange,
) -> Result<(f64, f64)> {
    if !overlap.feasible {
        return Err(Error::Domain(
            "requester_best_response called with an empty overlap".to_string(),
        ));
    }
    let grid = AmountGrid::for_config(config);
    let lo = grid.index_of(overlap.lower);
    let hi = grid.index_of(overlap.upper);
    let mut best_amount = grid.point(lo);
    let mut best_utility = f64::NEG_INFINITY;
    for i in lo..=hi {
        let amount = grid.point(i);
        let u = requester_expected_utility(
            &config.requester,
            &config.environment,
            price,
            amount,
        )?;
        if u > best_utility {
            best_utility = u;
            best_amount = amount;
        }
    }
    Ok((best_amount, best_utility))
}

struct Candidate {
    price: f64,
    amount: f64,
    owner_utility: f64,
}

/// Runs the iterative pricing sweep and returns the full trace, including
/// the signed contract when one exists.
///
/// The sweep stops at the first non-overlap after an overlap has occurred,
/// when the requester's range empties before any overlap (its risk is
/// monotone in price, so continuing is hopeless), or at the iteration cap.
/// An empty candidate set is a negotiation failure, not an error.
pub fn negotiate(config: &MarketConfig) -> Result<NegotiationTrace> {
    if let Err(violations) = config.validate() {
        return Err(Error::Config(violations));
    }
    let mut iterations = Vec::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut had_overlap = false;
    let mut termination = Termination::MaxIterations;

    for round in 0..config.negotiation.max_iterations {
        let price = config.owner.p_min + round as f64 * config.negotiation.price_step;
        let owner_range = owner_acceptable_range(config, price)?;
        let requester_range = requester_acceptable_range(config, price)?;
        let overlap = owner_range.intersect(&requester_range);

        let mut record = IterationRecord {
            price,
            owner_range,
            requester_range,
            overlap,
            requester_choice: None,
            requester_expected_utility: None,
        };

        if overlap.feasible {
            let (amount, utility) = requester_best_response(config, price, &overlap)?;
            record.requester_choice = Some(amount);
            record.requester_expected_utility = Some(utility);
            candidates.push(Candidate {
                price,
                amount,
                owner_utility: owner_expected_utility(
                    &config.owner,
                    &config.environment,
                    price,
                    amount,
                )?,
            });
            had_overlap = true;
            iterations.push(record);
        } else {
            iterations.push(record);
            if had_overlap {
                termination = Termination::NoOverlap;
                break;
            }
            if !requester_range.feasible {
                termination = Termination::NoFeasiblePrice;
                break;
            }
        }
    }

    let outcome = select_owner_optimal(config, &candidates)?;
    Ok(NegotiationTrace {
        iterations,
        outcome,
        termination,
    })
}

/// Owner-optimal candidate with deterministic tie-breaking: higher expected
/// utility, then lower price, then lower amount.
fn select_owner_optimal(
    config: &MarketConfig,
    candidates: &[Candidate],
) -> Result<Option<ForwardContract>> {
    let mut best: Option<&Candidate> = None;
    for c in candidates {
        let better = match best {
            None => true,
            Some(b) => {
                c.owner_utility > b.owner_utility
                    || (c.owner_utility == b.owner_utility
                        && (c.price < b.price
                            || (c.price == b.price && c.amount < b.amount)))
            }
        };
        if better {
            best = Some(c);
        }
    }
    let Some(best) = best else {
        return Ok(None);
    };
    Ok(Some(ForwardContract {
        price: best.price,
        amount: best.amount,
        owner_risk: owner_risk_analytic(
            &config.owner,
            &config.environment,
            best.price,
            best.amount,
        )?,
        requester_risk: requester_risk_analytic(
            &config.requester,
            &config.environment,
            best.price,
            best.amount,
        )?,
    }))
}

/// Exhaustive oracle: enumerates the full price and amount grid with the
/// same steps and the same termination bound as [`negotiate`], keeps the
/// pairs where both analytic risks pass and the amount is the requester's
/// best response inside that price's overlap, and returns the owner-optimal
/// pair under identical tie-breaking. Must match `negotiate` exactly.
pub fn brute_force_negotiate(config: &MarketConfig) -> Result<Option<ForwardContract>> {
    if let Err(violations) = config.validate() {
        return Err(Error::Config(violations));
    }
    let grid = AmountGrid::for_config(config);
    let n = grid.len();
    let mut candidates: Vec<Candidate> = Vec::new();
    let mut had_overlap = false;

    for round in 0..config.negotiation.max_iterations {
        let price = config.owner.p_min + round as f64 * config.negotiation.price_step;

        // Pointwise feasibility, no interval shortcuts.
        let mut owner_ok = vec![false; n];
        let mut owner_eu = vec![f64::NEG_INFINITY; n];
        let mut req_ok = vec![false; n];
        let mut req_eu = vec![f64::NEG_INFINITY; n];
        for i in 0..n {
            let amount = grid.point(i);
            if let Ok(eu) =
                owner_expected_utility(&config.owner, &config.environment, price, amount)
            {
                if eu > 0.0 {
                    if let Ok(risk) = owner_risk_analytic(
                        &config.owner,
                        &config.environment,
                        price,
                        amount,
                    ) {
                        if risk.value <= config.owner.t_b {
                            owner_ok[i] = true;
                            owner_eu[i] = eu;
                        }
                    }
                }
            }
            let risk = requester_risk_analytic(
                &config.requester,
                &config.environment,
                price,
                amount,
            )?;
            if risk.value <= config.requester.t_d {
                req_ok[i] = true;
                req_eu[i] = requester_expected_utility(
                    &config.requester,
                    &config.environment,
                    price,
                    amount,
                )?;
            }
        }

        let owner_block = index_block(&owner_ok, &owner_eu);
        let req_block = index_block(&req_ok, &req_eu);
        let overlap = match (owner_block, req_block) {
            (Some((alo, ahi)), Some((blo, bhi))) => {
                let lo = alo.max(blo);
                let hi = ahi.min(bhi);
                if lo <= hi {
                    Some((lo, hi))
                } else {
                    None
                }
            }
            _ => None,
        };

        match overlap {
            Some((lo, hi)) => {
                let mut best_i = lo;
                for i in lo..=hi {
                    if req_eu[i] > req_eu[best_i] {
                        best_i = i;
                    }
                }
                candidates.push(Candidate {
                    price,
                    amount: grid.point(best_i),
                    owner_utility: owner_eu[best_i],
                });
                had_overlap = true;
            }
            None => {
                if had_overlap {
                    break;
                }
                if req_block.is_none() {
                    break;
                }
            }
        }
    }

    select_owner_optimal(config, &candidates)
}

/// Contiguous index block around the best feasible index, or None when the
/// mask is empty. Independent twin of `block_around_best`, kept in index
/// space.
fn index_block(ok: &[bool], utility: &[f64]) -> Option<(usize, usize)> {
    let mut best: Option<usize> = None;
    for i in 0..ok.len() {
        if ok[i] && best.is_none_or(|b| utility[i] > utility[b]) {
            best = Some(i);
        }
    }
    let best = best?;
    let mut lo = best;
    while lo > 0 && ok[lo - 1] {
        lo -= 1;
    }
    let mut hi = best;
    while hi + 1 < ok.len() && ok[hi + 1] {
        hi += 1;
    }
    Some((lo, hi))
}

/// Re-checks a signed contract against both analytic risk constraints.
/// Negotiation already guarantees this; tests use it as the independent
/// post-hoc verification pass.
pub fn verify_contract(config: &MarketConfig, contract: &ForwardContract) -> Result<bool> {
    let owner: RiskEstimate = owner_risk_analytic(
        &config.owner,
        &config.environment,
        contract.price,
        contract.amount,
    )?;
    let requester = requester_risk_analytic(
        &config.requester,
        &config.environment,
        contract.price,
        contract.amount,
    )?;
    Ok(owner.value <= config.owner.t_b
        && requester.value <= config.requester.t_d
        && contract.price >= config.owner.p_min
        && contract.amount >= 0.0
        && contract.amount <= config.environment.total_bandwidth_w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MarketConfig;

    fn config() -> MarketConfig {
        MarketConfig::paper_default()
    }

    #[test]
    fn grid_covers_band_exactly_when_step_divides() {
        let grid = AmountGrid::new(30.0, 0.5);
        assert_eq!(grid.len(), 61);
        assert_eq!(grid.point(60), 30.0);
    }

    #[test]
    fn grid_never_exceeds_band() {
        let grid = AmountGrid::new(30.0, 0.1);
        let last = grid.point(grid.len() - 1);
        assert!(last <= 30.0);
        assert!(last > 29.8);
        let coarse = AmountGrid::new(30.25, 0.5);
        assert_eq!(coarse.point(coarse.len() - 1), 30.0);
    }

    #[test]
    fn vacuous_owner_tolerance_gives_full_band() {
        let mut c = config();
        c.owner.t_b = 1.0;
        let range = owner_acceptable_range(&c, c.owner.p_min).unwrap();
        assert!(range.feasible);
        assert_eq!(range.lower, 0.0);
        assert_eq!(range.upper, 30.0);
    }

    #[test]
    fn zero_owner_tolerance_is_infeasible() {
        let mut c = config();
        c.owner.t_b = 0.0;
        let range = owner_acceptable_range(&c, c.owner.p_min).unwrap();
        assert!(!range.feasible);
    }

    #[test]
    fn owner_range_matches_pointwise_scan() {
        let c = config();
        let price = c.owner.p_min;
        let range = owner_acceptable_range(&c, price).unwrap();
        let grid = AmountGrid::for_config(&c);
        let scan: Vec<f64> = (0..grid.len())
            .map(|i| grid.point(i))
            .filter(|&r| {
                owner_risk_analytic(&c.owner, &c.environment, price, r)
                    .map(|risk| risk.value <= c.owner.t_b)
                    .unwrap_or(false)
                    && owner_expected_utility(&c.owner, &c.environment, price, r).unwrap()
                        > 0.0
            })
            .collect();
        assert!(range.feasible);
        assert_eq!(range.lower, *scan.first().unwrap());
        assert_eq!(range.upper, *scan.last().unwrap());
        // The default config's feasible set is contiguous.
        assert_eq!(
            scan.len(),
            grid.index_of(range.upper) - grid.index_of(range.lower) + 1
        );
    }

    #[test]
    fn free_spectrum_requester_range_spans_positive_grid() {
        let c = config();
        let range = requester_acceptable_range(&c, 0.0).unwrap();
        assert!(range.feasible);
        // r = 0 keeps utility at the floor, so it is never acceptable for
        // t_d < 1; every positive grid point carries zero risk.
        assert_eq!(range.lower, 0.5);
        assert_eq!(range.upper, 30.0);
    }

    #[test]
    fn zero_requester_tolerance_with_positive_risk_is_infeasible() {
        let mut c = config();
        c.requester.t_d = 0.0;
        let range = requester_acceptable_range(&c, 30.0).unwrap();
        assert!(!range.feasible);
    }

    #[test]
    fn requester_range_matches_pointwise_scan() {
        let c = config();
        let price = 1.0;
        let range = requester_acceptable_range(&c, price).unwrap();
        let grid = AmountGrid::for_config(&c);
        let scan: Vec<f64> = (0..grid.len())
            .map(|i| grid.point(i))
            .filter(|&r| {
                requester_risk_analytic(&c.requester, &c.environment, price, r)
                    .unwrap()
                    .value
                    <= c.requester.t_d
            })
            .collect();
        assert!(range.feasible);
        assert_eq!(range.lower, *scan.first().unwrap());
        assert_eq!(range.upper, *scan.last().unwrap());
    }

    #[test]
    fn best_response_singleton_overlap() {
        let c = config();
        let overlap = AmountRange {
            lower: 3.5,
            upper: 3.5,
            feasible: true,
        };
        let (amount, _) = requester_best_response(&c, 1.0, &overlap).unwrap();
        assert_eq!(amount, 3.5);
    }

    #[test]
    fn best_response_free_spectrum_takes_everything() {
        let c = config();
        let overlap = AmountRange {
            lower: 2.0,
            upper: 10.0,
            feasible: true,
        };
        let (amount, _) = requester_best_response(&c, 0.0, &overlap).unwrap();
        assert_eq!(amount, 10.0);
    }

    #[test]
    fn best_response_matches_exhaustive_argmax() {
        let c = config();
        let overlap = AmountRange {
            lower: 2.0,
            upper: 10.0,
            feasible: true,
        };
        let (amount, utility) = requester_best_response(&c, 1.0, &overlap).unwrap();
        let grid = AmountGrid::for_config(&c);
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in grid.index_of(2.0)..=grid.index_of(10.0) {
            let r = grid.point(i);
            let u = requester_expected_utility(&c.requester, &c.environment, 1.0, r).unwrap();
            if u > best.0 {
                best = (u, r);
            }
        }
        assert_eq!(amount, best.1);
        assert_eq!(utility, best.0);
    }

    #[test]
    fn best_response_rejects_empty_overlap() {
        let c = config();
        let err = requester_best_response(&c, 1.0, &AmountRange::empty()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn jointly_infeasible_config_fails_cleanly() {
        // Zero tolerances against strictly positive risks everywhere: the
        // SNR window sits far below break-even (requester risk is 1 at every
        // amount), and the near-unity ratio threshold keeps the zero-user
        // atom inside the owner's failure event at every price.
        let mut c = config();
        c.owner.t_b = 0.0;
        c.requester.t_d = 0.0;
        c.owner.c1 = 100.0;
        c.owner.c2 = 0.0;
        c.owner.rho_b = 0.99;
        c.environment.snr_low_db = -50.0;
        c.environment.snr_high_db = -40.0;
        let trace = negotiate(&c).unwrap();
        assert!(trace.outcome.is_none());
        assert_eq!(trace.termination, Termination::NoFeasiblePrice);
        assert_eq!(trace.iterations.len(), 1);
        assert!(brute_force_negotiate(&c).unwrap().is_none());
    }

    #[test]
    fn zero_tolerances_at_defaults_still_find_riskless_corner() {
        // Under the default config both analytic risks are exactly zero in
        // part of the grid, so even zero tolerances admit a contract; the
        // sweep and the oracle must agree on it.
        let mut c = config();
        c.owner.t_b = 0.0;
        c.requester.t_d = 0.0;
        let trace = negotiate(&c).unwrap();
        let contract = trace.outcome.expect("riskless corner exists at defaults");
        assert_eq!(contract.owner_risk.value, 0.0);
        assert_eq!(contract.requester_risk.value, 0.0);
        let brute = brute_force_negotiate(&c).unwrap().unwrap();
        assert_eq!((contract.price, contract.amount), (brute.price, brute.amount));
    }

    #[test]
    fn singleton_candidate_is_returned() {
        // One scanned price, and the requester's risk admits exactly one
        // grid amount there.
        let mut c = config();
        c.owner.p_min = 20.0;
        c.owner.t_b = 1.0;
        c.negotiation.max_iterations = 1;
        let trace = negotiate(&c).unwrap();
        let contract = trace.outcome.expect("contract expected");
        assert_eq!(contract.price, 20.0);
        assert_eq!(contract.amount, 0.5);
        let brute = brute_force_negotiate(&c).unwrap().expect("oracle contract");
        assert_eq!((contract.price, contract.amount), (brute.price, brute.amount));
    }

    #[test]
    fn paper_default_matches_oracle() {
        let c = config();
        let trace = negotiate(&c).unwrap();
        let contract = trace.outcome.expect("default config must be feasible");
        let brute = brute_force_negotiate(&c).unwrap().expect("oracle contract");
        assert_eq!(contract.price, brute.price);
        assert_eq!(contract.amount, brute.amount);
        assert!(verify_contract(&c, &contract).unwrap());
        assert!(contract.owner_risk.value <= c.owner.t_b);
        assert!(contract.requester_risk.value <= c.requester.t_d);
    }

    #[test]
    fn negotiate_is_a_pure_function_of_config() {
        let mut c = config();
        c.negotiation.max_iterations = 40;
        let a = negotiate(&c).unwrap();
        let b = negotiate(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_prices_form_arithmetic_sequence() {
        let c = config();
        let trace = negotiate(&c).unwrap();
        assert!(trace.iterations.len() > 1);
        for (k, it) in trace.iterations.iter().enumerate() {
            assert_eq!(it.price, c.owner.p_min + k as f64 * c.negotiation.price_step);
        }
    }

    #[test]
    fn relaxing_tolerances_never_hurts_owner() {
        let c = config();
        let base = negotiate(&c).unwrap().outcome.unwrap();
        let base_eu =
            owner_expected_utility(&c.owner, &c.environment, base.price, base.amount).unwrap();
        for (t_b, t_d) in [(0.4, 0.2), (0.2, 0.4), (1.0, 1.0)] {
            let mut relaxed = c.clone();
            relaxed.owner.t_b = t_b;
            relaxed.requester.t_d = t_d;
            let outcome = negotiate(&relaxed).unwrap().outcome.unwrap();
            let eu = owner_expected_utility(
                &relaxed.owner,
                &relaxed.environment,
                outcome.price,
                outcome.amount,
            )
            .unwrap();
            assert!(
                eu >= base_eu - 1e-12,
                "tolerances ({t_b},{t_d}): {eu} < {base_eu}"
            );
        }
    }

    #[test]
    fn trace_csv_shape() {
        let mut c = config();
        c.negotiation.max_iterations = 3;
        let trace = negotiate(&c).unwrap();
        let csv = trace.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "price,owner_lo,owner_hi,req_lo,req_hi,choice,req_eu");
        assert_eq!(lines.len(), trace.iterations.len() + 1);
        assert!(lines[1].starts_with("0.100000000000,"));
    }

    #[test]
    fn max_iterations_cap_is_honored() {
        let mut c = config();
        c.negotiation.max_iterations = 5;
        let trace = negotiate(&c).unwrap();
        assert_eq!(trace.iterations.len(), 5);
        assert_eq!(trace.termination, Termination::MaxIterations);
        // Candidates were recorded for all five prices under the default
        // tolerances, so an outcome still exists.
        assert!(trace.outcome.is_some());
        let brute = brute_force_negotiate(&c).unwrap().unwrap();
        let got = trace.outcome.unwrap();
        assert_eq!((got.price, got.amount), (brute.price, brute.amount));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = config();
        c.negotiation.price_step = 0.0;
        assert!(matches!(negotiate(&c), Err(Error::Config(_))));
        assert!(matches!(brute_force_negotiate(&c), Err(Error::Config(_))));
    }
}
