//! Per-pair limit order books with uniform-price batch execution.
//!
//! Orders accumulate during a step and clear together in one auction:
//!
//! 1. The clearing price maximizes executable volume over all candidate
//!    prices; when a range of prices ties, the midpoint of the tied range is
//!    used, rounded down to the tick.
//! 2. The lighter side trades in full. Competing orders on the heavier side
//!    are filled floor-pro-rata by quantity at lot granularity; leftover lots
//!    go to the largest exact fractional remainders, ties broken by lower
//!    order id. Every order's fill is within one lot of its ideal share and
//!    the side sums to the crossing volume exactly.
//! 3. Rounds repeat on the residual book until no volume crosses, so the
//!    book is never left crossed.
//!
//! Orders resting from earlier batches are makers; orders submitted in the
//! current batch are takers. Takers pay a fee, makers receive a smaller
//! rebate, and the difference accrues to the fee sink.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::{wide, Amount, Fixed, Price};
use crate::ledger::{AccountId, AssetId, Ledger};
use crate::margin::{MarginParams, PosSide, PositionStore, SettleAccounts};

/// Index of a registered trading pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PairId(pub u32);

/// Order direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn position_side(self) -> PosSide {
        match self {
            Side::Buy => PosSide::Long,
            Side::Sell => PosSide::Short,
        }
    }
}

/// Unique order identifier, increasing in submission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct OrderId(pub u64);

/// Why an order exists; used by the harness to route fill side effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrderTag {
    Agent,
    Liquidation,
    Conversion(u64),
}

/// A resting or freshly submitted limit order.
#[derive(Debug, Clone, Serialize)]
pub struct Order {
    pub id: OrderId,
    pub owner: AccountId,
    pub pair: PairId,
    pub side: Side,
    /// Limit price in quote units per base unit, on the tick grid.
    pub price: Price,
    pub qty: Amount,
    pub remaining: Amount,
    pub submitted_step: u64,
    /// Notional-to-margin ratio backing this order's opening part.
    pub leverage: Fixed,
    pub reduce_only: bool,
    pub tag: OrderTag,
    /// Quote margin locked for the unfilled opening part.
    pub reserved_margin: Amount,
}

/// Static configuration of one pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairConfig {
    /// Display name, e.g. "USD/EXM".
    pub name: String,
    /// Base asset symbol (virtual, not a ledger asset).
    pub base: String,
    /// Quote/settlement asset (ledger asset used for margin).
    pub quote: AssetId,
    pub tick: Price,
    pub lot: Amount,
    /// Taker fee as a fraction of notional.
    pub taker_fee: Fixed,
    /// Maker rebate as a fraction of notional; must be below `taker_fee`.
    pub maker_rebate: Fixed,
    pub margin: MarginParams,
    /// Maximum accepted index age (steps) for margin calls.
    pub staleness_bound: u64,
}

/// One executed fill at the batch clearing price.
#[derive(Debug, Clone, Serialize)]
pub struct Trade {
    pub step: u64,
    pub pair: PairId,
    pub price: Price,
    pub qty: Amount,
    pub taker_order: OrderId,
    pub maker_order: OrderId,
    pub taker: AccountId,
    pub maker: AccountId,
    pub taker_fee: Amount,
    pub maker_rebate: Amount,
}

/// Request to place a new order.
#[derive(Debug, Clone)]
pub struct OrderReq {
    pub owner: AccountId,
    pub pair: PairId,
    pub side: Side,
    pub price: Price,
    pub qty: Amount,
    pub leverage: Fixed,
    pub reduce_only: bool,
    pub tag: OrderTag,
}

#[derive(Debug, Default)]
struct Book {
    orders: BTreeMap<OrderId, Order>,
}

/// All books plus the order id sequence.
pub struct Exchange {
    pairs: Vec<PairConfig>,
    books: Vec<Book>,
    next_order: u64,
    fee_sink: AccountId,
}

impl Exchange {
    pub fn new(fee_sink: AccountId) -> Exchange {
        Exchange {
            pairs: Vec::new(),
            books: Vec::new(),
            next_order: 1,
            fee_sink,
        }
    }

    pub fn add_pair(&mut self, config: PairConfig) -> Result<PairId> {
        if config.base.is_empty() || config.name.is_empty() {
            return Err(Error::ConfigInvalid("pair needs base and name".into()));
        }
        if !config.tick.is_positive() || !config.lot.is_positive() {
            return Err(Error::ConfigInvalid("tick and lot must be positive".into()));
        }
        if config.maker_rebate > config.taker_fee {
            return Err(Error::ConfigInvalid(
                "maker rebate must not exceed taker fee".into(),
            ));
        }
        let id = PairId(self.pairs.len() as u32);
        self.pairs.push(config);
        self.books.push(Book::default());
        Ok(id)
    }

    pub fn pair(&self, id: PairId) -> &PairConfig {
        &self.pairs[id.0 as usize]
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn order(&self, id: OrderId) -> Option<&Order> {
        self.books.iter().find_map(|b| b.orders.get(&id))
    }

    pub fn open_orders(&self, pair: PairId) -> impl Iterator<Item = &Order> {
        self.books[pair.0 as usize].orders.values()
    }

    pub fn best_bid(&self, pair: PairId) -> Option<Price> {
        self.open_orders(pair)
            .filter(|o| o.side == Side::Buy)
            .map(|o| o.price)
            .max()
    }

    pub fn best_ask(&self, pair: PairId) -> Option<Price> {
        self.open_orders(pair)
            .filter(|o| o.side == Side::Sell)
            .map(|o| o.price)
            .min()
    }

    /// Validates and queues an order into the current batch window, locking
    /// margin for its worst-case opening part.
    pub fn submit(
        &mut self,
        ledger: &mut Ledger,
        positions: &PositionStore,
        step: u64,
        req: OrderReq,
    ) -> Result<OrderId> {
        let cfg = &self.pairs[req.pair.0 as usize];
        if !req.price.is_positive() || !req.price.is_multiple_of(cfg.tick) {
            return Err(Error::BadTick(req.price.to_string(), cfg.tick.to_string()));
        }
        if !req.qty.is_positive() || !req.qty.is_multiple_of(cfg.lot) {
            return Err(Error::BadLot(req.qty.to_string(), cfg.lot.to_string()));
        }
        if !req.leverage.is_positive() || req.leverage > cfg.margin.max_leverage {
            return Err(Error::LeverageExceeded(format!(
                "order leverage {} vs max {}",
                req.leverage, cfg.margin.max_leverage
            )));
        }
        if positions.is_in_liquidation(req.owner, req.pair) && req.tag != OrderTag::Liquidation {
            return Err(Error::InsufficientMargin(
                "position is being liquidated".into(),
            ));
        }

        let reservation = if req.reduce_only {
            Amount::ZERO
        } else {
            // Quantity closing an opposite position needs no new margin, net
            // of reduce credit already claimed by resting same-side orders.
            let opp_qty = positions
                .get(req.owner, req.pair)
                .filter(|p| p.side == req.side.position_side().opposite())
                .map(|p| p.qty)
                .unwrap_or(Amount::ZERO);
            let claimed: Amount = self.books[req.pair.0 as usize]
                .orders
                .values()
                .filter(|o| o.owner == req.owner && o.side == req.side)
                .map(|o| o.remaining)
                .sum();
            let credit = (opp_qty - claimed.min(opp_qty)).max(Amount::ZERO);
            let chargeable = (req.qty - credit.min(req.qty)).max(Amount::ZERO);
            chargeable.mul_down(req.price).div_down(req.leverage)
        };

        if ledger.free(req.owner, cfg.quote) < reservation {
            return Err(Error::InsufficientMargin(format!(
                "needs {reservation} {} free, has {}",
                ledger.asset_symbol(cfg.quote),
                ledger.free(req.owner, cfg.quote)
            )));
        }
        ledger.lock(req.owner, cfg.quote, reservation)?;

        let id = OrderId(self.next_order);
        self.next_order += 1;
        self.books[req.pair.0 as usize].orders.insert(
            id,
            Order {
                id,
                owner: req.owner,
                pair: req.pair,
                side: req.side,
                price: req.price,
                qty: req.qty,
                remaining: req.qty,
                submitted_step: step,
                leverage: req.leverage,
                reduce_only: req.reduce_only,
                tag: req.tag,
                reserved_margin: reservation,
            },
        );
        Ok(id)
    }

    /// Removes an open order and releases its margin reservation.
    pub fn cancel(
        &mut self,
        ledger: &mut Ledger,
        caller: AccountId,
        order_id: OrderId,
    ) -> Result<()> {
        let book_idx = self
            .books
            .iter()
            .position(|b| b.orders.contains_key(&order_id))
            .ok_or(Error::UnknownOrder(order_id.0))?;
        let owner = self.books[book_idx].orders[&order_id].owner;
        if owner != caller {
            return Err(Error::NotOwner(order_id.0));
        }
        let order = self.books[book_idx].orders.remove(&order_id).unwrap();
        let quote = self.pairs[book_idx].quote;
        ledger.unlock(owner, quote, order.reserved_margin)?;
        Ok(())
    }

    /// Cancels every open order of `owner` on `pair` (used at liquidation).
    pub fn cancel_all(
        &mut self,
        ledger: &mut Ledger,
        owner: AccountId,
        pair: PairId,
    ) -> Result<Vec<OrderId>> {
        let ids: Vec<OrderId> = self.books[pair.0 as usize]
            .orders
            .values()
            .filter(|o| o.owner == owner)
            .map(|o| o.id)
            .collect();
        for id in &ids {
            self.cancel(ledger, owner, *id)?;
        }
        Ok(ids)
    }

    /// Runs the batch auction for one pair, applying fills to positions and
    /// settling fees. Returns the executed trades in deterministic order.
    pub fn run_batch(
        &mut self,
        ledger: &mut Ledger,
        positions: &mut PositionStore,
        accounts: SettleAccounts,
        pair: PairId,
        step: u64,
    ) -> Result<Vec<Trade>> {
        let mut trades = Vec::new();
        while let Some((price, volume)) = self.compute_clearing(pair) {
            debug_assert!(volume.is_positive());
            self.execute_round(
                ledger,
                positions,
                accounts,
                pair,
                step,
                price,
                volume,
                &mut trades,
            )?;
        }
        debug_assert!(
            match (self.best_bid(pair), self.best_ask(pair)) {
                (Some(b), Some(a)) => b < a,
                _ => true,
            },
            "book crossed after batch"
        );
        Ok(trades)
    }

    /// Max-volume uniform clearing price for the current book, if any volume
    /// crosses. Ties resolve to the midpoint of the tied price range, rounded
    /// down to the tick.
    fn compute_clearing(&self, pair: PairId) -> Option<(Price, Amount)> {
        let book = &self.books[pair.0 as usize];
        let mut candidates: Vec<Price> = book.orders.values().map(|o| o.price).collect();
        candidates.sort();
        candidates.dedup();

        let mut best_vol = Amount::ZERO;
        let mut lo = Price::ZERO;
        let mut hi = Price::ZERO;
        for &p in &candidates {
            let demand: Amount = book
                .orders
                .values()
                .filter(|o| o.side == Side::Buy && o.price >= p)
                .map(|o| o.remaining)
                .sum();
            let supply: Amount = book
                .orders
                .values()
                .filter(|o| o.side == Side::Sell && o.price <= p)
                .map(|o| o.remaining)
                .sum();
            let vol = demand.min(supply);
            if vol > best_vol {
                best_vol = vol;
                lo = p;
                hi = p;
            } else if vol == best_vol && vol.is_positive() {
                lo = lo.min(p);
                hi = hi.max(p);
            }
        }
        if !best_vol.is_positive() {
            return None;
        }
        let tick = self.pairs[pair.0 as usize].tick;
        let mid = Fixed::from_raw((lo.raw() + hi.raw()) / 2).floor_to(tick);
        Some((mid.max(lo).min(hi), best_vol))
    }

    #[allow(clippy::too_many_arguments)]
    fn execute_round(
        &mut self,
        ledger: &mut Ledger,
        positions: &mut PositionStore,
        accounts: SettleAccounts,
        pair: PairId,
        step: u64,
        price: Price,
        volume: Amount,
        trades: &mut Vec<Trade>,
    ) -> Result<()> {
        let lot = self.pairs[pair.0 as usize].lot;
        let book = &self.books[pair.0 as usize];

        let eligible = |side: Side| -> Vec<(OrderId, Amount)> {
            book.orders
                .values()
                .filter(|o| {
                    o.side == side
                        && match side {
                            Side::Buy => o.price >= price,
                            Side::Sell => o.price <= price,
                        }
                })
                .map(|o| (o.id, o.remaining))
                .collect()
        };
        let bids = eligible(Side::Buy);
        let asks = eligible(Side::Sell);
        let bid_total: Amount = bids.iter().map(|x| x.1).sum();
        let ask_total: Amount = asks.iter().map(|x| x.1).sum();
        debug_assert_eq!(volume, bid_total.min(ask_total));

        let bid_fills = if bid_total > volume {
            pro_rata(&bids, volume, lot)
        } else {
            bids.clone()
        };
        let ask_fills = if ask_total > volume {
            pro_rata(&asks, volume, lot)
        } else {
            asks.clone()
        };
        debug_assert_eq!(bid_fills.iter().map(|x| x.1).sum::<Amount>(), volume);
        debug_assert_eq!(ask_fills.iter().map(|x| x.1).sum::<Amount>(), volume);

        // Pair buy fills against sell fills in id order.
        let mut bi = 0;
        let mut ai = 0;
        let mut bid_left = bid_fills.first().map(|x| x.1).unwrap_or(Amount::ZERO);
        let mut ask_left = ask_fills.first().map(|x| x.1).unwrap_or(Amount::ZERO);
        while bi < bid_fills.len() && ai < ask_fills.len() {
            if bid_left.is_zero() {
                bi += 1;
                bid_left = bid_fills.get(bi).map(|x| x.1).unwrap_or(Amount::ZERO);
                continue;
            }
            if ask_left.is_zero() {
                ai += 1;
                ask_left = ask_fills.get(ai).map(|x| x.1).unwrap_or(Amount::ZERO);
                continue;
            }
            let qty = bid_left.min(ask_left);
            bid_left -= qty;
            ask_left -= qty;
            let trade = self.settle_fill(
                ledger,
                positions,
                accounts,
                pair,
                step,
                price,
                qty,
                bid_fills[bi].0,
                ask_fills[ai].0,
            )?;
            trades.push(trade);
        }

        // Drop fully filled orders and release any leftover reservation dust.
        let quote = self.pairs[pair.0 as usize].quote;
        let done: Vec<OrderId> = self.books[pair.0 as usize]
            .orders
            .values()
            .filter(|o| o.remaining.is_zero())
            .map(|o| o.id)
            .collect();
        for id in done {
            let order = self.books[pair.0 as usize].orders.remove(&id).unwrap();
            if order.reserved_margin.is_positive() {
                ledger.unlock(order.owner, quote, order.reserved_margin)?;
            }
        }
        Ok(())
    }

    /// Applies one buy/sell fill pair at the clearing price: margin effects
    /// on both sides, then taker fee and maker rebate.
    #[allow(clippy::too_many_arguments)]
    fn settle_fill(
        &mut self,
        ledger: &mut Ledger,
        positions: &mut PositionStore,
        accounts: SettleAccounts,
        pair: PairId,
        step: u64,
        price: Price,
        qty: Amount,
        buy_id: OrderId,
        sell_id: OrderId,
    ) -> Result<Trade> {
        let cfg = self.pairs[pair.0 as usize].clone();
        for id in [buy_id, sell_id] {
            let order = self.books[pair.0 as usize].orders.get(&id).unwrap().clone();
            // Margin slice for this fill from the order's reservation.
            let slice = if qty == order.remaining {
                order.reserved_margin
            } else {
                order
                    .reserved_margin
                    .mul_down(qty)
                    .div_down(order.remaining)
            };
            let dir = order.side.position_side();
            let opp = positions
                .get(order.owner, pair)
                .filter(|p| p.side == dir.opposite())
                .map(|p| p.qty)
                .unwrap_or(Amount::ZERO);
            let open_qty = (qty - opp.min(qty)).max(Amount::ZERO);
            debug_assert!(
                !(order.reduce_only && open_qty.is_positive()),
                "reduce-only order would open exposure"
            );
            let required = if open_qty.is_zero() {
                Amount::ZERO
            } else {
                open_qty
                    .mul_down(price.min(order.price))
                    .div_down(order.leverage)
            };
            let mut take = required.min(slice);
            if take < slice {
                ledger.unlock(order.owner, cfg.quote, slice - take)?;
            } else if required > slice {
                // Rounding dust or stale reduce credit; top up from free.
                let top = (required - slice).min(ledger.free(order.owner, cfg.quote));
                ledger.lock(order.owner, cfg.quote, top)?;
                take += top;
            }
            positions.apply_fill(
                ledger,
                accounts,
                order.owner,
                pair,
                dir,
                qty,
                price,
                take,
                order.tag == OrderTag::Liquidation,
            )?;
            let entry = self.books[pair.0 as usize].orders.get_mut(&id).unwrap();
            entry.remaining -= qty;
            entry.reserved_margin -= slice.min(entry.reserved_margin);
        }

        let buy = self.books[pair.0 as usize].orders[&buy_id].clone();
        let sell = self.books[pair.0 as usize].orders[&sell_id].clone();
        let buy_fresh = buy.submitted_step == step;
        let sell_fresh = sell.submitted_step == step;
        // Resting orders are makers; fresh ones takers. Two fresh orders
        // rank by arrival: the later id takes. Two resting orders cannot
        // cross (the book was uncrossed when they rested).
        debug_assert!(buy_fresh || sell_fresh, "resting orders crossed");
        let (taker, maker) = match (buy_fresh, sell_fresh) {
            (true, false) => (&buy, &sell),
            (false, true) => (&sell, &buy),
            _ => {
                if buy_id > sell_id {
                    (&buy, &sell)
                } else {
                    (&sell, &buy)
                }
            }
        };

        let notional = qty.mul_down(price);
        // The fee is capped by the taker's free balance; the rebate never
        // exceeds what was actually collected, so the sink's flow per fill
        // stays non-negative.
        let mut taker_fee = notional.mul_down(cfg.taker_fee);
        taker_fee = taker_fee.min(ledger.free(taker.owner, cfg.quote));
        ledger.transfer(taker.owner, self.fee_sink, cfg.quote, taker_fee, "fee")?;
        let mut maker_rebate = if maker.submitted_step == step {
            // An intra-batch "maker" provided no resting liquidity.
            Amount::ZERO
        } else {
            notional.mul_down(cfg.maker_rebate)
        };
        maker_rebate = maker_rebate.min(taker_fee);
        ledger.transfer(
            self.fee_sink,
            maker.owner,
            cfg.quote,
            maker_rebate,
            "rebate",
        )?;

        Ok(Trade {
            step,
            pair,
            price,
            qty,
            taker_order: taker.id,
            maker_order: maker.id,
            taker: taker.owner,
            maker: maker.owner,
            taker_fee,
            maker_rebate,
        })
    }
}

/// Floor pro-rata allocation of `target` over `orders` at lot granularity.
/// Leftover lots go to the largest exact fractional remainders, ties to the
/// lower order id.
fn pro_rata(orders: &[(OrderId, Amount)], target: Amount, lot: Amount) -> Vec<(OrderId, Amount)> {
    let total: Amount = orders.iter().map(|x| x.1).sum();
    debug_assert!(total >= target);
    let mut fills: Vec<(OrderId, Amount)> = Vec::with_capacity(orders.len());
    // Exact fractional remainder numerator over the common denominator
    // `total`: target*qty - share*total, compared as 256-bit integers.
    let mut remainders: Vec<(usize, (u128, u128))> = Vec::with_capacity(orders.len());
    let mut allocated = Amount::ZERO;
    for (i, &(id, qty)) in orders.iter().enumerate() {
        let share = target.mul_down(qty).div_down(total).floor_to(lot);
        let num = wide::sub(
            wide::mul(target.raw(), qty.raw()),
            wide::mul(share.raw(), total.raw()),
        );
        fills.push((id, share));
        remainders.push((i, num));
        allocated += share;
    }
    let mut leftover_lots = (target - allocated).raw() / lot.raw();
    debug_assert_eq!((target - allocated).raw() % lot.raw(), 0);
    remainders.sort_by(|a, b| b.1.cmp(&a.1).then(orders[a.0].0.cmp(&orders[b.0].0)));
    while leftover_lots > 0 {
        let mut progressed = false;
        for &(i, _) in &remainders {
            if leftover_lots == 0 {
                break;
            }
            if fills[i].1 + lot <= orders[i].1 {
                fills[i].1 += lot;
                leftover_lots -= 1;
                progressed = true;
            }
        }
        assert!(progressed, "pro-rata could not place leftover lots");
    }
    fills.retain(|x| x.1.is_positive());
    fills
}
