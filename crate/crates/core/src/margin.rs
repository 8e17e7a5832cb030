//! Positions, equity, margin requirements and forced liquidation.
//!
//! Positions are netted per (owner, pair) with isolated margin. Instead of a
//! volume-weighted entry price we store the exact entry notional (sum of
//! fill-qty times fill-price, which is exact on the tick/lot grids), so
//! equity and realized profit are exact fixed-point values:
//!
//! ```plain
//! equity(long)  = margin + qty * mark - notional
//! equity(short) = margin + notional - qty * mark
//! ```
//!
//! A fully backed long has `margin == notional`, so its equity is
//! `qty * mark`, strictly positive at any positive mark: it can never be
//! margin-called.
//!
//! Realized profit is settled through a clearing-pool account; losses flow
//! in, profits flow out. With matched long/short open interest the pool's
//! net movement equals short entry notional minus long entry notional at all
//! times, which is the zero-sum identity the harness re-checks every step.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exchange::PairId;
use crate::fixed::{Amount, Fixed, Price};
use crate::ledger::{AccountId, AssetId, Ledger};

/// Position direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PosSide {
    Long,
    Short,
}

impl PosSide {
    pub fn opposite(self) -> PosSide {
        match self {
            PosSide::Long => PosSide::Short,
            PosSide::Short => PosSide::Long,
        }
    }
}

/// An open derivative position with isolated margin.
#[derive(Debug, Clone, Serialize)]
pub struct Position {
    pub owner: AccountId,
    pub pair: PairId,
    pub side: PosSide,
    /// Base quantity, always positive while open.
    pub qty: Amount,
    /// Exact entry notional in quote units (sum of qty_i * price_i).
    pub notional: Amount,
    /// Locked quote-unit margin attributed to this position.
    pub margin: Amount,
    /// Set once a margin call has been issued; cleared when flat.
    pub in_liquidation: bool,
}

impl Position {
    /// Quote-unit equity at the given mark price.
    pub fn equity(&self, mark: Price) -> Amount {
        let value = self.qty.mul_down(mark);
        match self.side {
            PosSide::Long => self.margin + value - self.notional,
            PosSide::Short => self.margin + self.notional - value,
        }
    }

    /// Volume-weighted entry price (display/liquidation pricing only).
    pub fn entry_price(&self) -> Price {
        self.notional.div_down(self.qty)
    }

    /// Mark price at which equity reaches zero.
    pub fn bankruptcy_price(&self) -> Price {
        match self.side {
            PosSide::Long => (self.notional - self.margin)
                .max(Fixed::ZERO)
                .div_down(self.qty),
            PosSide::Short => (self.notional + self.margin).div_down(self.qty),
        }
    }
}

/// Risk limits for one pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MarginParams {
    /// Highest notional-to-margin ratio accepted at order submission.
    pub max_leverage: Fixed,
    /// Fraction of position margin below which equity triggers liquidation.
    pub maintenance_ratio: Fixed,
    /// Liquidation orders are priced this fraction beyond bankruptcy.
    pub liquidation_band: Fixed,
}

impl Default for MarginParams {
    fn default() -> Self {
        MarginParams {
            max_leverage: Fixed::from_int(1),
            maintenance_ratio: Fixed::ZERO,
            liquidation_band: "0.05".parse().unwrap(),
        }
    }
}

/// A margin call emitted by the processor; the harness turns it into an
/// aggressively priced reduce-only order for the next batch.
#[derive(Debug, Clone, Serialize)]
pub struct MarginCall {
    pub owner: AccountId,
    pub pair: PairId,
    pub side: PosSide,
    pub qty: Amount,
    pub bankruptcy_price: Price,
    /// Index price that triggered the call.
    pub trigger_index: Price,
}

/// Result of applying one fill to the position store.
#[derive(Debug, Clone, Default)]
pub struct FillEffect {
    pub closed_qty: Amount,
    pub opened_qty: Amount,
    /// Signed realized profit booked to the owner.
    pub realized: Amount,
    /// Portion of a realized loss that the owner's margin and (for forced
    /// closes) free balance could not cover, drawn from the reserve.
    pub shortfall: Amount,
    /// Margin newly attributed to the position out of the order reservation.
    pub margin_locked: Amount,
    /// Margin returned to the owner's free balance from the closed part.
    pub margin_released: Amount,
}

/// System accounts the margin engine settles against.
#[derive(Debug, Clone, Copy)]
pub struct SettleAccounts {
    pub clearing_pool: AccountId,
    pub reserve: AccountId,
    pub quote: AssetId,
}

/// All open positions of one trading pair.
#[derive(Debug, Default)]
pub struct PositionStore {
    positions: BTreeMap<(AccountId, PairId), Position>,
}

impl PositionStore {
    pub fn new() -> PositionStore {
        PositionStore::default()
    }

    pub fn get(&self, owner: AccountId, pair: PairId) -> Option<&Position> {
        self.positions.get(&(owner, pair))
    }

    pub fn get_mut(&mut self, owner: AccountId, pair: PairId) -> Option<&mut Position> {
        self.positions.get_mut(&(owner, pair))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Position> {
        self.positions.values()
    }

    pub fn iter_pair(&self, pair: PairId) -> impl Iterator<Item = &Position> + '_ {
        self.positions.values().filter(move |p| p.pair == pair)
    }

    pub fn is_in_liquidation(&self, owner: AccountId, pair: PairId) -> bool {
        self.get(owner, pair).is_some_and(|p| p.in_liquidation)
    }

    /// Opens or updates a position directly, enforcing the leverage bound at
    /// the stated price. Used by tests and direct position management; batch
    /// fills go through [`PositionStore::apply_fill`].
    #[allow(clippy::too_many_arguments)]
    pub fn open_or_update(
        &mut self,
        ledger: &mut Ledger,
        accounts: SettleAccounts,
        params: &MarginParams,
        owner: AccountId,
        pair: PairId,
        side: PosSide,
        qty: Amount,
        price: Price,
        margin: Amount,
    ) -> Result<FillEffect> {
        if !qty.is_positive() || !price.is_positive() {
            return Err(Error::ConfigInvalid(
                "qty and price must be positive".into(),
            ));
        }
        // The opening fraction of the fill locks margin and is subject to the
        // leverage bound; the closing fraction needs neither.
        let dir = side;
        let opp_qty = match self.get(owner, pair) {
            Some(p) if p.side == dir.opposite() => p.qty,
            _ => Amount::ZERO,
        };
        let open_qty = (qty - opp_qty.min(qty)).max(Fixed::ZERO);
        let margin_needed = if open_qty.is_zero() {
            Amount::ZERO
        } else if open_qty == qty {
            margin
        } else {
            margin.mul_down(open_qty).div_down(qty)
        };
        if open_qty.is_positive()
            && Fixed::cmp_products(open_qty, price, margin_needed, params.max_leverage).is_gt()
        {
            return Err(Error::LeverageExceeded(format!(
                "notional {} exceeds margin {margin_needed} x leverage {}",
                open_qty.mul_down(price),
                params.max_leverage
            )));
        }
        if ledger.free(owner, accounts.quote) < margin_needed {
            return Err(Error::InsufficientFunds(format!(
                "margin {margin_needed} not lockable"
            )));
        }
        ledger.lock(owner, accounts.quote, margin_needed)?;
        self.apply_fill(
            ledger,
            accounts,
            owner,
            pair,
            dir,
            qty,
            price,
            margin_needed,
            false,
        )
    }

    /// Applies one fill at `price`: nets against an opposite position first,
    /// then opens the remainder using `margin_locked` (already locked in the
    /// ledger and attributed to the order).
    #[allow(clippy::too_many_arguments)]
    pub fn apply_fill(
        &mut self,
        ledger: &mut Ledger,
        accounts: SettleAccounts,
        owner: AccountId,
        pair: PairId,
        dir: PosSide,
        qty: Amount,
        price: Price,
        margin_locked: Amount,
        forced: bool,
    ) -> Result<FillEffect> {
        let mut effect = FillEffect {
            margin_locked,
            ..FillEffect::default()
        };
        let mut remaining = qty;

        if let Some(pos) = self.positions.get_mut(&(owner, pair)) {
            if pos.side == dir.opposite() && remaining.is_positive() {
                let close_qty = pos.qty.min(remaining);
                let full_close = close_qty == pos.qty;
                let notional_share = if full_close {
                    pos.notional
                } else {
                    pos.notional.mul_down(close_qty).div_down(pos.qty)
                };
                let margin_share = if full_close {
                    pos.margin
                } else {
                    pos.margin.mul_down(close_qty).div_down(pos.qty)
                };
                let value = close_qty.mul_down(price);
                let realized = match pos.side {
                    PosSide::Long => value - notional_share,
                    PosSide::Short => notional_share - value,
                };

                pos.qty -= close_qty;
                pos.notional -= notional_share;
                pos.margin -= margin_share;
                remaining -= close_qty;
                effect.closed_qty = close_qty;
                effect.realized = realized;
                effect.margin_released = margin_share;
                let flat = pos.qty.is_zero();
                if flat {
                    self.positions.remove(&(owner, pair));
                }

                ledger.unlock(owner, accounts.quote, margin_share)?;
                if realized.is_positive() {
                    ledger.transfer(
                        accounts.clearing_pool,
                        owner,
                        accounts.quote,
                        realized,
                        "trade_pnl",
                    )?;
                } else if realized.is_negative() {
                    let loss = -realized;
                    // Isolated margin: a forced close may only consume the
                    // margin it just released; a voluntary close may also dip
                    // into the owner's free balance.
                    let cap = if forced {
                        margin_share.min(ledger.free(owner, accounts.quote))
                    } else {
                        ledger.free(owner, accounts.quote)
                    };
                    let from_owner = loss.min(cap);
                    let shortfall = loss - from_owner;
                    ledger.transfer(
                        owner,
                        accounts.clearing_pool,
                        accounts.quote,
                        from_owner,
                        "trade_pnl",
                    )?;
                    if shortfall.is_positive() {
                        ledger.transfer(
                            accounts.reserve,
                            accounts.clearing_pool,
                            accounts.quote,
                            shortfall,
                            "liquidation_shortfall",
                        )?;
                        effect.shortfall = shortfall;
                    }
                }
            }
        }

        if remaining.is_positive() {
            let add_notional = remaining.mul_down(price);
            let entry = self.positions.entry((owner, pair)).or_insert(Position {
                owner,
                pair,
                side: dir,
                qty: Amount::ZERO,
                notional: Amount::ZERO,
                margin: Amount::ZERO,
                in_liquidation: false,
            });
            debug_assert_eq!(entry.side, dir, "flip must close the old side first");
            entry.side = dir;
            entry.qty += remaining;
            entry.notional += add_notional;
            entry.margin += margin_locked;
            effect.opened_qty = remaining;
        } else if margin_locked.is_positive() {
            // Reservation slice not needed (pure close): give it back.
            ledger.unlock(owner, accounts.quote, margin_locked)?;
            effect.margin_locked = Amount::ZERO;
        }

        Ok(effect)
    }

    /// Adds funding income to (or drains funding cost from) position margin.
    pub fn adjust_margin(&mut self, owner: AccountId, pair: PairId, delta: Amount) {
        if let Some(pos) = self.positions.get_mut(&(owner, pair)) {
            pos.margin += delta;
        }
    }

    /// The margin-call processor: flags every position whose equity at the
    /// index price has fallen to or below the maintenance level.
    pub fn run_margin_calls(
        &mut self,
        pair: PairId,
        params: &MarginParams,
        index: Price,
        index_age: u64,
        staleness_bound: u64,
    ) -> Result<Vec<MarginCall>> {
        if index_age > staleness_bound {
            return Err(Error::StaleIndex {
                age: index_age,
                bound: staleness_bound,
            });
        }
        let mut calls = Vec::new();
        for pos in self.positions.values_mut() {
            if pos.pair != pair || pos.in_liquidation {
                continue;
            }
            let floor = params.maintenance_ratio.mul_down(pos.margin);
            if pos.equity(index) <= floor {
                pos.in_liquidation = true;
                calls.push(MarginCall {
                    owner: pos.owner,
                    pair,
                    side: pos.side,
                    qty: pos.qty,
                    bankruptcy_price: pos.bankruptcy_price(),
                    trigger_index: index,
                });
            }
        }
        Ok(calls)
    }

    /// Exact zero-sum identity: with matched open interest, the clearing
    /// pool's net movement equals short entry notional minus long entry
    /// notional, making realized + unrealized profit sum to zero at any mark.
    pub fn check_zero_sum(&self, pair: PairId, pool_delta: Amount) -> Result<()> {
        let mut long_qty = Amount::ZERO;
        let mut short_qty = Amount::ZERO;
        let mut long_notional = Amount::ZERO;
        let mut short_notional = Amount::ZERO;
        for p in self.iter_pair(pair) {
            match p.side {
                PosSide::Long => {
                    long_qty += p.qty;
                    long_notional += p.notional;
                }
                PosSide::Short => {
                    short_qty += p.qty;
                    short_notional += p.notional;
                }
            }
        }
        if long_qty != short_qty {
            return Err(Error::InvariantViolation(format!(
                "open interest mismatch: long {long_qty} vs short {short_qty}"
            )));
        }
        if pool_delta != short_notional - long_notional {
            return Err(Error::InvariantViolation(format!(
                "zero-sum broken: pool delta {pool_delta} vs notional gap {}",
                short_notional - long_notional
            )));
        }
        Ok(())
    }
}
