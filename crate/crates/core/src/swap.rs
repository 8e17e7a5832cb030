//! The swap processor: deviation measurement, rate control and periodic
//! funding settlement.
//!
//! The controller measures the volume-weighted deviation of executed trade
//! prices from the index over a window and nudges the per-period swap rate
//! against it: trading below the index raises the rate (longs earn more),
//! trading above lowers it. A positive rate means shorts pay longs
//! `qty * index * rate` quote units per period; a negative rate reverses the
//! flow. Payments move between position margins peer-to-peer; payers round
//! up, receivers round down, and the residue accrues to the fee sink so each
//! settlement sums to zero exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exchange::PairId;
use crate::fixed::{Amount, Fixed, Price};
use crate::ledger::{AccountId, AssetId, Ledger};
use crate::margin::{PosSide, PositionStore};

/// Controller parameters for one pair.
#[derive(Debug, Clone, Serialize)]
pub struct SwapParams {
    /// Proportional gain applied to the measured deviation.
    pub gain: Fixed,
    pub rate_min: Fixed,
    pub rate_max: Fixed,
    /// Steps between funding settlements.
    pub swap_period: u64,
    /// Steps of trade history entering each measurement.
    pub measure_period: u64,
    /// Optional system haircut on the receiving side (fraction).
    pub haircut: Fixed,
}

impl Default for SwapParams {
    fn default() -> Self {
        SwapParams {
            gain: "0.1".parse().unwrap(),
            rate_min: "-0.05".parse().unwrap(),
            rate_max: "0.05".parse().unwrap(),
            swap_period: 16,
            measure_period: 16,
            haircut: Fixed::ZERO,
        }
    }
}

/// Mutable controller state for one pair.
#[derive(Debug, Clone, Serialize)]
pub struct FundingState {
    pub pair: PairId,
    /// Signed per-period swap rate; positive pays longs.
    pub rate: Fixed,
    /// Executed trades since the last measurement: (price, qty, step).
    pub window_trades: Vec<(Price, Amount, u64)>,
    pub last_swap_step: u64,
    pub params: SwapParams,
}

impl FundingState {
    pub fn new(pair: PairId, params: SwapParams) -> FundingState {
        FundingState {
            pair,
            rate: Fixed::ZERO,
            window_trades: Vec::new(),
            last_swap_step: 0,
            params,
        }
    }

    pub fn record_trade(&mut self, price: Price, qty: Amount, step: u64) {
        self.window_trades.push((price, qty, step));
    }
}

/// Volume-weighted deviation of executed prices from the index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationSample {
    /// Signed fraction; zero for an empty window.
    pub vwdev: Fixed,
    pub volume: Amount,
}

/// Computes the volume-weighted relative deviation of trades from the index
/// series. `index_at(step)` must cover every trade's step.
pub fn measure(
    trades: &[(Price, Amount, u64)],
    index_at: impl Fn(u64) -> Option<Price>,
) -> Result<DeviationSample> {
    let mut weighted = Fixed::ZERO;
    let mut volume = Amount::ZERO;
    for &(price, qty, step) in trades {
        let index = index_at(step).ok_or(Error::MissingIndex(step))?;
        let dev = (price - index).div_down(index);
        weighted += qty.mul_down(dev);
        volume += qty;
    }
    if volume.is_zero() {
        return Ok(DeviationSample {
            vwdev: Fixed::ZERO,
            volume,
        });
    }
    Ok(DeviationSample {
        vwdev: weighted.div_down(volume),
        volume,
    })
}

/// One controller update: `rate <- clamp(rate - gain * vwdev)`.
pub fn update_rate(state: &mut FundingState, sample: DeviationSample) -> Fixed {
    let raw = state.rate - state.params.gain.mul_down(sample.vwdev);
    state.rate = raw.clamp(state.params.rate_min, state.params.rate_max);
    state.window_trades.clear();
    state.rate
}

/// One settled funding payment.
#[derive(Debug, Clone, Serialize)]
pub struct SwapTransfer {
    pub account: AccountId,
    /// Signed margin delta in quote units.
    pub amount: Amount,
}

/// Outcome of one funding settlement.
#[derive(Debug, Clone, Serialize)]
pub struct SwapSettlement {
    pub transfers: Vec<SwapTransfer>,
    /// Rounding residue credited to the fee sink; non-negative.
    pub residue: Amount,
    /// Sum of absolute amounts moved, for reporting.
    pub total_swapped: Amount,
}

/// Executes the periodic swap on every open position of `pair` at index
/// price `index`: longs receive `qty * index * rate`, shorts pay it (signs
/// flip for negative rates). The receiving side is shaved by `haircut`,
/// which lands in the fee sink with the rounding residue. Exactly zero-sum
/// including the residue.
#[allow(clippy::too_many_arguments)]
pub fn execute_swap(
    ledger: &mut Ledger,
    positions: &mut PositionStore,
    pair: PairId,
    quote: AssetId,
    fee_sink: AccountId,
    index: Price,
    rate: Fixed,
    haircut: Fixed,
) -> Result<SwapSettlement> {
    if rate.is_zero() {
        return Ok(SwapSettlement {
            transfers: Vec::new(),
            residue: Amount::ZERO,
            total_swapped: Amount::ZERO,
        });
    }
    let magnitude = rate.abs();
    let receiving_side = if rate.is_positive() {
        PosSide::Long
    } else {
        PosSide::Short
    };

    // qty * index is exact on the lot/tick grids; the single rounding is on
    // the rate multiplication. Payers round up, receivers round down.
    struct Leg {
        owner: AccountId,
        pay: Amount,
        recv: Amount,
        margin: Amount,
    }
    let mut legs: Vec<Leg> = Vec::new();
    let keep = Fixed::ONE - haircut;
    for pos in positions.iter_pair(pair) {
        let value = pos.qty.mul_down(index);
        if pos.side == receiving_side {
            legs.push(Leg {
                owner: pos.owner,
                pay: Amount::ZERO,
                recv: value.mul_down(magnitude).mul_down(keep),
                margin: pos.margin,
            });
        } else {
            legs.push(Leg {
                owner: pos.owner,
                pay: value.mul_up(magnitude),
                recv: Amount::ZERO,
                margin: pos.margin,
            });
        }
    }

    let mut transfers = Vec::new();
    let mut pot = Amount::ZERO;
    let mut total = Amount::ZERO;
    for leg in &legs {
        if leg.pay.is_positive() {
            // A payer can only be drained down to its position margin, not
            // into stake or order reservations sharing the locked balance.
            let available = leg.margin.max(Amount::ZERO).min(leg.pay);
            ledger.transfer_locked_to_free(leg.owner, fee_sink, quote, available, "swap")?;
            positions.adjust_margin(leg.owner, pair, -available);
            pot += available;
            total += available;
            transfers.push(SwapTransfer {
                account: leg.owner,
                amount: -available,
            });
        }
    }
    for leg in &legs {
        if leg.recv.is_positive() {
            let amount = leg.recv.min(pot);
            ledger.transfer_free_to_locked(fee_sink, leg.owner, quote, amount, "swap")?;
            positions.adjust_margin(leg.owner, pair, amount);
            pot -= amount;
            transfers.push(SwapTransfer {
                account: leg.owner,
                amount,
            });
        }
    }
    Ok(SwapSettlement {
        transfers,
        residue: pot,
        total_swapped: total,
    })
}
