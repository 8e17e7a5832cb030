//! Index price computation and the reporter consensus round.
//!
//! The index is the volume-weighted average of outside venue prices. In
//! simulation it is delivered through a consensus round: deposit-qualified
//! accounts are sampled, each submits a price, the median becomes the feed,
//! reporters near the median earn a reward and the rest lose part of their
//! deposit. Sampling is a pure function of (seed, step).

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_pcg::Pcg64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exchange::PairId;
use crate::fixed::{Amount, Fixed, Price};
use crate::ledger::AccountId;

/// One computed index price.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IndexQuote {
    pub pair: PairId,
    pub price: Price,
    pub step: u64,
    pub source_volume: Amount,
}

/// Consensus-round parameters.
#[derive(Debug, Clone, Serialize)]
pub struct ReporterParams {
    /// Sample size; odd and at least 3.
    pub sample_size: usize,
    /// Relative tolerance around the median that still earns the reward.
    pub tolerance: Fixed,
    /// Reward per honest report, paid from the fee sink.
    pub reward: Amount,
    /// Deposit slashed from reports outside the band.
    pub slash: Amount,
    /// Minimum staked deposit to be sampled.
    pub deposit_min: Amount,
}

impl Default for ReporterParams {
    fn default() -> Self {
        ReporterParams {
            sample_size: 7,
            tolerance: "0.01".parse().unwrap(),
            reward: "0.1".parse().unwrap(),
            slash: Fixed::from_int(10),
            deposit_min: Fixed::from_int(100),
        }
    }
}

/// Outcome of one consensus round.
#[derive(Debug, Clone, Serialize)]
pub struct SchellingOutcome {
    pub aggregate: Price,
    pub rewarded: Vec<AccountId>,
    pub slashed: Vec<(AccountId, Amount)>,
}

/// Volume-weighted average of venue quotes. Quotes with zero volume are
/// ignored; at least one positive-volume quote is required.
pub fn compute_index(pair: PairId, step: u64, quotes: &[(Price, Amount)]) -> Result<IndexQuote> {
    let mut weighted = Fixed::ZERO;
    let mut volume = Amount::ZERO;
    for &(price, vol) in quotes {
        if vol.is_positive() {
            weighted += price.mul_down(vol);
            volume += vol;
        }
    }
    if !volume.is_positive() {
        return Err(Error::NoVenueData);
    }
    Ok(IndexQuote {
        pair,
        price: weighted.div_down(volume),
        step,
        source_volume: volume,
    })
}

/// Deterministically samples `n` reporters from the eligible set for this
/// (seed, step). `eligible` must be sorted by account id.
pub fn sample_reporters(
    eligible: &[AccountId],
    n: usize,
    seed: u64,
    step: u64,
) -> Result<Vec<AccountId>> {
    if eligible.len() < n {
        return Err(Error::InsufficientReporters {
            have: eligible.len(),
            need: n,
        });
    }
    let mut rng = Pcg64::seed_from_u64(stream_seed(seed, 0x6f7261636c65, step));
    let mut pool: Vec<AccountId> = eligible.to_vec();
    pool.shuffle(&mut rng);
    let mut sample: Vec<AccountId> = pool.into_iter().take(n).collect();
    sample.sort();
    Ok(sample)
}

/// Derives an independent RNG stream from the scenario seed, a purpose tag
/// and a step counter (splitmix-style mixing).
pub fn stream_seed(seed: u64, tag: u64, k: u64) -> u64 {
    let mut z = seed ^ tag.rotate_left(17) ^ k.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Runs one consensus round over sampled reports. The deposit map gives each
/// reporter's slashable (staked) balance; slashes are capped by it. Returns
/// the median aggregate plus reward and slash assignments; the caller moves
/// the money.
pub fn schelling_round(
    reports: &BTreeMap<AccountId, Price>,
    deposits: &BTreeMap<AccountId, Amount>,
    params: &ReporterParams,
) -> Result<SchellingOutcome> {
    if reports.len() < params.sample_size {
        return Err(Error::InsufficientReporters {
            have: reports.len(),
            need: params.sample_size,
        });
    }
    let mut prices: Vec<Price> = reports.values().copied().collect();
    prices.sort();
    let aggregate = prices[prices.len() / 2];

    let mut rewarded = Vec::new();
    let mut slashed = Vec::new();
    for (&who, &price) in reports {
        // |report - median| <= tolerance * median, compared exactly.
        let dev = (price - aggregate).abs();
        let within = Fixed::cmp_products(dev, Fixed::ONE, params.tolerance, aggregate).is_le();
        if within {
            rewarded.push(who);
        } else {
            let deposit = deposits.get(&who).copied().unwrap_or(Amount::ZERO);
            slashed.push((who, params.slash.min(deposit)));
        }
    }
    Ok(SchellingOutcome {
        aggregate,
        rewarded,
        slashed,
    })
}
