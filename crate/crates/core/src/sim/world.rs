//! Simulation state and the per-step scheduler.
//!
//! Each step runs a fixed phase order: outside price update, shocks,
//! transfer arrivals, the oracle round, agent decisions, conversion orders,
//! the batch auction, conversion settlement, margin calls, funding, the
//! central-bank period, then metrics and invariant checks. Identical
//! (config, seed) pairs produce identical state and logs byte for byte.

use std::collections::{BTreeMap, VecDeque};

use crate::agents::{case1_opportunity, case2_opportunity, mm_quote, MmParams, SpreadModel};
use crate::bank::{CentralBank, RatePolicy};
use crate::currency::CurrencyService;
use crate::error::{Error, Result};
use crate::exchange::{
    Exchange, Order, OrderId, OrderReq, OrderTag, PairConfig, PairId, Side, Trade,
};
use crate::fixed::{Amount, Fixed, Price};
use crate::ledger::{AccountId, AssetId, Ledger};
use crate::margin::{MarginParams, PosSide, PositionStore, SettleAccounts};
use crate::oracle::{self, ReporterParams};
use crate::sim::config::{AgentCfg, ConversionAction, ScenarioConfig, ShockKind};
use crate::sim::events::{Event, EventLog};
use crate::sim::metrics::{LiquidationSummary, MetricsFrame};
use crate::sim::venue::{quantize, RealVenue};
use crate::swap::{self, FundingState, SwapParams};

/// Well-known system accounts.
#[derive(Debug, Clone, Copy)]
pub struct SysAccounts {
    pub fee_sink: AccountId,
    pub clearing_pool: AccountId,
    pub reserve: AccountId,
    pub vault: AccountId,
    pub central_bank: AccountId,
    pub currency_service: AccountId,
    pub venue_pool: AccountId,
    pub in_transit: AccountId,
}

struct MinerRt {
    account: AccountId,
    rw: AccountId,
    per_step_qty: Amount,
    confidence: f64,
    min_edge: f64,
    lambda: f64,
    sigma: f64,
    risk_free_outside: f64,
    hold_rate: f64,
    margin_multiple: Fixed,
    bias: f64,
    working: Vec<OrderId>,
    /// Outside currency bought for an open case-2 short.
    case2_usd: Amount,
}

struct PanicRt {
    account: AccountId,
    start: u64,
    duration: u64,
    per_step: Amount,
    remaining: Amount,
    leverage: Fixed,
    anchor_factor: Fixed,
    anchor: Option<Price>,
}

enum AgentState {
    MarketMaker {
        account: AccountId,
        params: MmParams,
        orders: Vec<OrderId>,
    },
    ArbMiner(MinerRt),
    PanicSeller(PanicRt),
    FlowBuyer {
        account: AccountId,
        per_step_qty: Amount,
        order: Option<OrderId>,
    },
    Reporter {
        account: AccountId,
        bias: f64,
    },
    ConversionClient {
        account: AccountId,
        schedule: Vec<crate::sim::config::ConversionStep>,
    },
    ShortSeller {
        account: AccountId,
        step: u64,
        qty: Amount,
        price: Price,
        leverage: Fixed,
        done: bool,
    },
    TakerBuyer {
        account: AccountId,
        step: u64,
        qty: Amount,
        price: Price,
        done: bool,
    },
}

struct Agent {
    name: String,
    state: AgentState,
}

struct PendingTransfer {
    arrive_step: u64,
    to: AccountId,
    asset: AssetId,
    amount: Amount,
}

#[derive(Clone)]
struct LiqMeta {
    bankruptcy_price: Price,
    trigger_index: Price,
}

/// Full simulation state.
pub struct World {
    pub config: ScenarioConfig,
    pub seed: u64,
    pub step: u64,
    pub ledger: Ledger,
    pub exchange: Exchange,
    pub positions: PositionStore,
    pub funding: FundingState,
    pub bank: CentralBank,
    pub currency: CurrencyService,
    pub venue: RealVenue,
    pub oracle_params: ReporterParams,
    pub sys: SysAccounts,
    pub pair: PairId,
    pub quote_asset: AssetId,
    pub outside_asset: AssetId,
    pub pegged_asset: AssetId,
    pub events: EventLog,
    pub frames: Vec<MetricsFrame>,
    pub liquidations: Vec<LiquidationSummary>,
    pub mark: Price,
    agents: Vec<Agent>,
    transfers: VecDeque<PendingTransfer>,
    index_history: BTreeMap<u64, Price>,
    /// Open liquidation orders: order id -> (owner, side being closed).
    liq_orders: BTreeMap<OrderId, (AccountId, PosSide)>,
    liq_meta: BTreeMap<AccountId, LiqMeta>,
    clearing_pool_initial: Amount,
    miner_initial_wealth: Amount,
    realized_by_account: BTreeMap<String, Amount>,
    last_headroom: Amount,
    last_solvency_ok: bool,
    agents_csv: String,
    pub invariant_violations: u64,
}

impl World {
    pub fn new(config: ScenarioConfig, seed_override: Option<u64>) -> Result<World> {
        config.validate()?;
        let seed = seed_override.unwrap_or(config.seed);
        let mut ledger = Ledger::new();

        let fee_sink = ledger.register_account("fee-sink")?;
        let clearing_pool = ledger.register_account("clearing-pool")?;
        let reserve = ledger.register_account("reserve")?;
        let vault = ledger.register_account("vault")?;
        let central_bank = ledger.register_account("central-bank")?;
        let currency_service = ledger.register_account("currency-service")?;
        let venue_pool = ledger.register_account("venue-pool")?;
        let in_transit = ledger.register_account("in-transit")?;
        let sys = SysAccounts {
            fee_sink,
            clearing_pool,
            reserve,
            vault,
            central_bank,
            currency_service,
            venue_pool,
            in_transit,
        };

        let quote_asset = ledger.register_asset(&config.pair.quote, Some(central_bank))?;
        let outside_asset = ledger.register_asset(&config.pair.base, None)?;
        let pegged_asset =
            ledger.register_asset(&config.currency_service.token, Some(currency_service))?;

        ledger.endow(fee_sink, quote_asset, config.system.fee_sink_float)?;
        ledger.endow(reserve, quote_asset, config.system.reserve_float)?;
        ledger.endow(clearing_pool, quote_asset, config.system.clearing_float)?;
        ledger.endow(venue_pool, quote_asset, config.system.venue_float)?;
        ledger.endow(venue_pool, outside_asset, config.system.venue_float)?;

        let mut exchange = Exchange::new(fee_sink);
        let pair = exchange.add_pair(PairConfig {
            name: config.pair.name.clone(),
            base: config.pair.base.clone(),
            quote: quote_asset,
            tick: config.pair.tick,
            lot: config.pair.lot,
            taker_fee: config.pair.taker_fee,
            maker_rebate: config.pair.maker_rebate,
            margin: MarginParams {
                max_leverage: config.pair.max_leverage,
                maintenance_ratio: config.pair.maintenance_ratio,
                liquidation_band: config.pair.liquidation_band,
            },
            staleness_bound: config.pair.staleness_bound,
        })?;

        let funding = FundingState::new(
            pair,
            SwapParams {
                gain: config.controller.gain,
                rate_min: config.controller.rate_min,
                rate_max: config.controller.rate_max,
                swap_period: config.controller.swap_period,
                measure_period: config.controller.measure_period,
                haircut: config.controller.haircut,
            },
        );
        let bank = CentralBank::new(
            central_bank,
            quote_asset,
            RatePolicy {
                horizon: config.central_bank.rate_horizon,
                margin: config.central_bank.rate_margin,
                solvency_horizon: config.central_bank.solvency_horizon,
            },
        );
        let currency = CurrencyService::new(
            currency_service,
            pegged_asset,
            quote_asset,
            pair,
            config.currency_service.fee,
            fee_sink,
        );
        let venue = RealVenue::new(
            &config.real_venue,
            seed,
            config.pair.tick,
            venue_pool,
            outside_asset,
            quote_asset,
        );
        let oracle_params = ReporterParams {
            sample_size: config.oracle.sample_size,
            tolerance: config.oracle.tolerance,
            reward: config.oracle.reward,
            slash: config.oracle.slash,
            deposit_min: config.oracle.deposit_min,
        };
        let initial_mark = venue.mid;
        let clearing_pool_initial = config.system.clearing_float;

        let mut world = World {
            config: config.clone(),
            seed,
            step: 0,
            ledger,
            exchange,
            positions: PositionStore::new(),
            funding,
            bank,
            currency,
            venue,
            oracle_params,
            sys,
            pair,
            quote_asset,
            outside_asset,
            pegged_asset,
            events: EventLog::new(),
            frames: Vec::new(),
            liquidations: Vec::new(),
            mark: initial_mark,
            agents: Vec::new(),
            transfers: VecDeque::new(),
            index_history: BTreeMap::new(),
            liq_orders: BTreeMap::new(),
            liq_meta: BTreeMap::new(),
            clearing_pool_initial,
            miner_initial_wealth: Amount::ZERO,
            realized_by_account: BTreeMap::new(),
            last_headroom: Amount::ZERO,
            last_solvency_ok: true,
            agents_csv: String::from("step,agent,venue,position,realized,unrealized\n"),
            invariant_violations: 0,
        };
        world.spawn_agents()?;
        Ok(world)
    }

    fn spawn_agents(&mut self) -> Result<()> {
        let lock_steps = self.config.central_bank.lock_steps;
        let initial_mid = self.venue.mid;
        let mut miner_wealth = Amount::ZERO;
        for cfg in self.config.agents.clone() {
            match cfg {
                AgentCfg::MarketMaker {
                    name,
                    use_reserve,
                    funds,
                    half_spread,
                    level_gap,
                    levels,
                    level_qty,
                    inventory_cap,
                } => {
                    let account = if use_reserve {
                        self.sys.reserve
                    } else {
                        let id = self.ledger.register_account(&name)?;
                        self.ledger.endow(id, self.quote_asset, funds)?;
                        id
                    };
                    self.agents.push(Agent {
                        name,
                        state: AgentState::MarketMaker {
                            account,
                            params: MmParams {
                                half_spread,
                                level_gap,
                                levels,
                                level_qty,
                                inventory_cap,
                            },
                            orders: Vec::new(),
                        },
                    });
                }
                AgentCfg::ArbMiner {
                    name,
                    count,
                    usd_funds,
                    exm_funds,
                    stake,
                    per_step_qty,
                    confidence,
                    min_edge,
                    lambda,
                    sigma,
                    risk_free_outside,
                    hold_rate,
                    margin_multiple,
                    bias,
                } => {
                    for i in 0..count {
                        let label = if count == 1 {
                            name.clone()
                        } else {
                            format!("{name}-{i}")
                        };
                        let account = self.ledger.register_account(&label)?;
                        let rw = self.ledger.register_account(&format!("{label}@rw"))?;
                        self.ledger
                            .endow(account, self.quote_asset, exm_funds + stake)?;
                        self.ledger.endow(rw, self.outside_asset, usd_funds)?;
                        if stake.is_positive() {
                            self.bank
                                .stake(&mut self.ledger, account, stake, 0, lock_steps)?;
                        }
                        miner_wealth += exm_funds + stake + usd_funds.mul_down(initial_mid);
                        self.agents.push(Agent {
                            name: label,
                            state: AgentState::ArbMiner(MinerRt {
                                account,
                                rw,
                                per_step_qty,
                                confidence,
                                min_edge,
                                lambda,
                                sigma,
                                risk_free_outside,
                                hold_rate,
                                margin_multiple,
                                bias,
                                working: Vec::new(),
                                case2_usd: Amount::ZERO,
                            }),
                        });
                    }
                }
                AgentCfg::PanicSeller {
                    name,
                    funds,
                    start_step,
                    duration,
                    per_step_qty,
                    total_qty,
                    leverage,
                    anchor_factor,
                } => {
                    let account = self.ledger.register_account(&name)?;
                    self.ledger.endow(account, self.quote_asset, funds)?;
                    self.agents.push(Agent {
                        name,
                        state: AgentState::PanicSeller(PanicRt {
                            account,
                            start: start_step,
                            duration,
                            per_step: per_step_qty,
                            remaining: total_qty,
                            leverage,
                            anchor_factor,
                            anchor: None,
                        }),
                    });
                }
                AgentCfg::FlowBuyer {
                    name,
                    count,
                    funds,
                    per_step_qty,
                } => {
                    for i in 0..count {
                        let label = if count == 1 {
                            name.clone()
                        } else {
                            format!("{name}-{i}")
                        };
                        let account = self.ledger.register_account(&label)?;
                        self.ledger.endow(account, self.quote_asset, funds)?;
                        self.agents.push(Agent {
                            name: label,
                            state: AgentState::FlowBuyer {
                                account,
                                per_step_qty,
                                order: None,
                            },
                        });
                    }
                }
                AgentCfg::Reporter {
                    name,
                    count,
                    stake,
                    bias,
                    funds,
                } => {
                    for i in 0..count {
                        let label = if count == 1 {
                            name.clone()
                        } else {
                            format!("{name}-{i}")
                        };
                        let account = self.ledger.register_account(&label)?;
                        self.ledger
                            .endow(account, self.quote_asset, funds + stake)?;
                        if stake.is_positive() {
                            self.bank
                                .stake(&mut self.ledger, account, stake, 0, lock_steps)?;
                        }
                        self.agents.push(Agent {
                            name: label,
                            state: AgentState::Reporter { account, bias },
                        });
                    }
                }
                AgentCfg::ConversionClient {
                    name,
                    funds,
                    schedule,
                } => {
                    let account = self.ledger.register_account(&name)?;
                    self.ledger.endow(account, self.quote_asset, funds)?;
                    self.agents.push(Agent {
                        name,
                        state: AgentState::ConversionClient { account, schedule },
                    });
                }
                AgentCfg::ShortSeller {
                    name,
                    funds,
                    step,
                    qty,
                    price,
                    leverage,
                } => {
                    let account = self.ledger.register_account(&name)?;
                    self.ledger.endow(account, self.quote_asset, funds)?;
                    self.agents.push(Agent {
                        name,
                        state: AgentState::ShortSeller {
                            account,
                            step,
                            qty,
                            price,
                            leverage,
                            done: false,
                        },
                    });
                }
                AgentCfg::TakerBuyer {
                    name,
                    funds,
                    step,
                    qty,
                    price,
                } => {
                    let account = self.ledger.register_account(&name)?;
                    self.ledger.endow(account, self.quote_asset, funds)?;
                    self.agents.push(Agent {
                        name,
                        state: AgentState::TakerBuyer {
                            account,
                            step,
                            qty,
                            price,
                            done: false,
                        },
                    });
                }
            }
        }
        self.miner_initial_wealth = miner_wealth;
        Ok(())
    }

    pub fn settle_accounts(&self) -> SettleAccounts {
        SettleAccounts {
            clearing_pool: self.sys.clearing_pool,
            reserve: self.sys.reserve,
            quote: self.quote_asset,
        }
    }

    /// Index price the processors use at `step` (the consensus aggregate).
    pub fn index(&self, step: u64) -> Price {
        self.index_history
            .get(&step)
            .copied()
            .unwrap_or(self.venue.mid)
    }

    pub fn index_history(&self) -> &BTreeMap<u64, Price> {
        &self.index_history
    }

    /// Queues a cross-venue transfer through the in-transit account.
    pub fn send_transfer(
        &mut self,
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        amount: Amount,
    ) -> Result<()> {
        if !amount.is_positive() {
            return Ok(());
        }
        self.ledger
            .transfer(from, self.sys.in_transit, asset, amount, "transfer_send")?;
        let delay = self.venue.transfer_delay.max(1);
        self.transfers.push_back(PendingTransfer {
            arrive_step: self.step + delay,
            to,
            asset,
            amount,
        });
        Ok(())
    }

    /// Submits an order in the current step's batch window.
    pub fn submit_order(&mut self, req: OrderReq) -> Result<OrderId> {
        self.exchange
            .submit(&mut self.ledger, &self.positions, self.step, req)
    }

    pub fn cancel_order(&mut self, caller: AccountId, id: OrderId) -> Result<()> {
        self.exchange.cancel(&mut self.ledger, caller, id)
    }

    /// Runs the whole scenario.
    pub fn run_to_end(&mut self) -> Result<()> {
        for _ in 0..self.config.steps {
            self.run_step()?;
        }
        Ok(())
    }

    /// One full simulation step.
    pub fn run_step(&mut self) -> Result<()> {
        let step = self.step;
        self.venue.advance(step);
        self.apply_shocks(step)?;
        self.deliver_transfers(step)?;
        self.oracle_round(step)?;
        self.agent_phase(step)?;

        let index = self.index(step);
        self.currency.place_orders(
            &mut self.ledger,
            &mut self.exchange,
            &self.positions,
            index,
            step,
        )?;

        let accounts = self.settle_accounts();
        let trades = self.exchange.run_batch(
            &mut self.ledger,
            &mut self.positions,
            accounts,
            self.pair,
            step,
        )?;
        self.after_batch(step, &trades)?;

        let conversions =
            self.currency
                .settle(&mut self.ledger, &mut self.exchange, index, step)?;
        for c in conversions {
            let user = self.ledger.account_name(c.user).to_string();
            let direction = match c.direction {
                crate::currency::Direction::Issue => "issue",
                crate::currency::Direction::Redeem => "redeem",
            };
            let outcome = match c.outcome {
                crate::currency::Outcome::Filled => "filled",
                crate::currency::Outcome::PartiallyFilled => "partially_filled",
                crate::currency::Outcome::NoLiquidity => "no_liquidity",
                crate::currency::Outcome::Expired => "expired",
            };
            self.events.push(Event::Conversion {
                step,
                user,
                direction: direction.to_string(),
                amount_in: c.amount_in,
                amount_out: c.amount_out,
                fill_price: c.fill_price,
                fee: c.fee,
                outcome: outcome.to_string(),
            });
        }

        self.margin_call_phase(step)?;
        self.funding_phase(step)?;
        self.bank_phase(step)?;
        self.finish_step(step)?;
        self.step += 1;
        Ok(())
    }

    fn apply_shocks(&mut self, step: u64) -> Result<()> {
        for shock in self.config.shocks.clone() {
            if shock.step != step {
                continue;
            }
            match &shock.kind {
                ShockKind::PriceJump { factor } => {
                    self.venue.apply_jump(*factor);
                    self.events.push(Event::Shock {
                        step,
                        kind: format!("price_jump x{factor}"),
                    });
                }
                ShockKind::CapitalRemoval { account, fraction } => {
                    let id = if account == "reserve" {
                        Some(self.sys.reserve)
                    } else {
                        self.ledger.account_id(account)
                    };
                    let Some(id) = id else {
                        return Err(Error::ConfigInvalid(format!(
                            "capital removal target {account} not found"
                        )));
                    };
                    let amount = self.ledger.free(id, self.quote_asset).mul_down(*fraction);
                    self.ledger.transfer(
                        id,
                        self.sys.vault,
                        self.quote_asset,
                        amount,
                        "capital_removal",
                    )?;
                    self.events.push(Event::Shock {
                        step,
                        kind: format!("capital_removal {account} {amount}"),
                    });
                }
            }
        }
        Ok(())
    }

    fn deliver_transfers(&mut self, step: u64) -> Result<()> {
        let mut pending = std::mem::take(&mut self.transfers);
        let mut keep = VecDeque::with_capacity(pending.len());
        for t in pending.drain(..) {
            if t.arrive_step <= step {
                self.ledger.transfer(
                    self.sys.in_transit,
                    t.to,
                    t.asset,
                    t.amount,
                    "transfer_arrive",
                )?;
            } else {
                keep.push_back(t);
            }
        }
        self.transfers = keep;
        Ok(())
    }

    fn oracle_round(&mut self, step: u64) -> Result<()> {
        let raw = oracle::compute_index(self.pair, step, &[(self.venue.mid, self.venue.volume)])?;
        let mut eligible: Vec<AccountId> = Vec::new();
        for stake in self.bank.stakes() {
            if !eligible.contains(&stake.owner)
                && self.bank.staked_of(stake.owner) >= self.oracle_params.deposit_min
            {
                eligible.push(stake.owner);
            }
        }
        eligible.sort();

        let aggregate = if eligible.len() >= self.oracle_params.sample_size {
            let sampled = oracle::sample_reporters(
                &eligible,
                self.oracle_params.sample_size,
                self.seed,
                step,
            )?;
            let tick = self.exchange.pair(self.pair).tick;
            let mut reports = BTreeMap::new();
            let mut deposits = BTreeMap::new();
            for &who in &sampled {
                let bias = self.bias_of(who);
                let price = if bias == 0.0 {
                    raw.price
                } else {
                    quantize(raw.price.to_f64() * (1.0 + bias), tick)
                };
                reports.insert(who, price);
                deposits.insert(who, self.bank.staked_of(who));
            }
            let outcome = oracle::schelling_round(&reports, &deposits, &self.oracle_params)?;
            let mut rewarded_names = Vec::new();
            for &who in &outcome.rewarded {
                if self.ledger.free(self.sys.fee_sink, self.quote_asset)
                    >= self.oracle_params.reward
                {
                    self.ledger.transfer(
                        self.sys.fee_sink,
                        who,
                        self.quote_asset,
                        self.oracle_params.reward,
                        "oracle_reward",
                    )?;
                    rewarded_names.push(self.ledger.account_name(who).to_string());
                }
            }
            let mut slashed_names = Vec::new();
            for &(who, amount) in &outcome.slashed {
                let taken = self.bank.slash_stake(who, amount);
                self.ledger.transfer_locked_to_free(
                    who,
                    self.sys.fee_sink,
                    self.quote_asset,
                    taken,
                    "slash",
                )?;
                slashed_names.push((self.ledger.account_name(who).to_string(), taken));
            }
            self.events.push(Event::Oracle {
                step,
                sampled: sampled
                    .iter()
                    .map(|a| self.ledger.account_name(*a).to_string())
                    .collect(),
                reports: reports.values().copied().collect(),
                aggregate: outcome.aggregate,
                rewards: rewarded_names,
                slashes: slashed_names,
            });
            outcome.aggregate
        } else {
            raw.price
        };
        self.index_history.insert(step, aggregate);
        Ok(())
    }

    fn bias_of(&self, account: AccountId) -> f64 {
        for agent in &self.agents {
            match &agent.state {
                AgentState::Reporter { account: a, bias } if *a == account => return *bias,
                AgentState::ArbMiner(m) if m.account == account => return m.bias,
                _ => {}
            }
        }
        0.0
    }

    fn agent_phase(&mut self, step: u64) -> Result<()> {
        let mut agents = std::mem::take(&mut self.agents);
        let mut result = Ok(());
        for agent in &mut agents {
            result = self.act(agent, step);
            if result.is_err() {
                break;
            }
        }
        self.agents = agents;
        result
    }

    fn act(&mut self, agent: &mut Agent, step: u64) -> Result<()> {
        match &mut agent.state {
            AgentState::MarketMaker {
                account,
                params,
                orders,
            } => {
                let account = *account;
                for id in orders.drain(..) {
                    if self.exchange.order(id).is_some() {
                        self.exchange.cancel(&mut self.ledger, account, id)?;
                    }
                }
                let inventory = match self.positions.get(account, self.pair) {
                    Some(p) if p.side == PosSide::Long => p.qty,
                    Some(p) => -p.qty,
                    None => Amount::ZERO,
                };
                let tick = self.exchange.pair(self.pair).tick;
                let index = self.index(step);
                for quote in mm_quote(Some(index), inventory, params, tick) {
                    let req = OrderReq {
                        owner: account,
                        pair: self.pair,
                        side: if quote.is_bid { Side::Buy } else { Side::Sell },
                        price: quote.price,
                        qty: quote.qty,
                        leverage: Fixed::ONE,
                        reduce_only: false,
                        tag: OrderTag::Agent,
                    };
                    // Capital limits silently shrink the ladder.
                    if let Ok(id) = self.submit_order(req) {
                        orders.push(id);
                    }
                }
            }
            AgentState::ArbMiner(miner) => self.miner_act(miner, step)?,
            AgentState::PanicSeller(panic) => {
                if step == panic.start {
                    let pre_shock = self
                        .index_history
                        .get(&(step - 1))
                        .copied()
                        .unwrap_or(self.venue.mid);
                    let tick = self.exchange.pair(self.pair).tick;
                    panic.anchor = Some(pre_shock.mul_down(panic.anchor_factor).floor_to(tick));
                }
                let Some(anchor) = panic.anchor else {
                    return Ok(());
                };
                if step >= panic.start
                    && step < panic.start + panic.duration
                    && panic.remaining.is_positive()
                {
                    let lot = self.exchange.pair(self.pair).lot;
                    let qty = panic.per_step.min(panic.remaining).floor_to(lot);
                    if qty.is_positive() {
                        let req = OrderReq {
                            owner: panic.account,
                            pair: self.pair,
                            side: Side::Sell,
                            price: anchor,
                            qty,
                            leverage: panic.leverage,
                            reduce_only: false,
                            tag: OrderTag::Agent,
                        };
                        match self.submit_order(req) {
                            Ok(_) => panic.remaining -= qty,
                            Err(e) => self.events.push(Event::Note {
                                step,
                                text: format!("panic seller out of margin: {e}"),
                            }),
                        }
                    }
                }
            }
            AgentState::FlowBuyer {
                account,
                per_step_qty,
                order,
            } => {
                let account = *account;
                if let Some(id) = order.take() {
                    if self.exchange.order(id).is_some() {
                        self.exchange.cancel(&mut self.ledger, account, id)?;
                    }
                }
                let tick = self.exchange.pair(self.pair).tick;
                let lot = self.exchange.pair(self.pair).lot;
                let limit = self.mark.floor_to(tick);
                let qty = per_step_qty.floor_to(lot);
                if limit.is_positive() && qty.is_positive() {
                    let req = OrderReq {
                        owner: account,
                        pair: self.pair,
                        side: Side::Buy,
                        price: limit,
                        qty,
                        leverage: Fixed::ONE,
                        reduce_only: false,
                        tag: OrderTag::Agent,
                    };
                    if let Ok(id) = self.submit_order(req) {
                        *order = Some(id);
                    }
                }
            }
            AgentState::Reporter { .. } => {}
            AgentState::ConversionClient { account, schedule } => {
                let account = *account;
                for item in schedule.iter().filter(|s| s.step == step) {
                    let outcome = match item.action {
                        ConversionAction::Issue => self.currency.request_issue(
                            &mut self.ledger,
                            &self.exchange,
                            account,
                            item.amount,
                            item.limit_price,
                            item.deadline_step,
                        ),
                        ConversionAction::Redeem => self.currency.request_redeem(
                            &mut self.ledger,
                            &self.exchange,
                            account,
                            item.amount,
                            item.limit_price,
                            item.deadline_step,
                        ),
                    };
                    if let Err(e) = outcome {
                        self.events.push(Event::Note {
                            step,
                            text: format!("conversion rejected: {e}"),
                        });
                    }
                }
            }
            AgentState::ShortSeller {
                account,
                step: at,
                qty,
                price,
                leverage,
                done,
            } => {
                if !*done && step == *at {
                    *done = true;
                    let req = OrderReq {
                        owner: *account,
                        pair: self.pair,
                        side: Side::Sell,
                        price: *price,
                        qty: *qty,
                        leverage: *leverage,
                        reduce_only: false,
                        tag: OrderTag::Agent,
                    };
                    if let Err(e) = self.submit_order(req) {
                        self.events.push(Event::Note {
                            step,
                            text: format!("short seller order rejected: {e}"),
                        });
                    }
                }
            }
            AgentState::TakerBuyer {
                account,
                step: at,
                qty,
                price,
                done,
            } => {
                if !*done && step == *at {
                    *done = true;
                    let req = OrderReq {
                        owner: *account,
                        pair: self.pair,
                        side: Side::Buy,
                        price: *price,
                        qty: *qty,
                        leverage: Fixed::ONE,
                        reduce_only: false,
                        tag: OrderTag::Agent,
                    };
                    if let Err(e) = self.submit_order(req) {
                        self.events.push(Event::Note {
                            step,
                            text: format!("buyer order rejected: {e}"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn miner_act(&mut self, miner: &mut MinerRt, step: u64) -> Result<()> {
        // Refresh working orders every step.
        for id in miner.working.drain(..) {
            if self.exchange.order(id).is_some() {
                self.exchange.cancel(&mut self.ledger, miner.account, id)?;
            }
        }
        if self.positions.is_in_liquidation(miner.account, self.pair) {
            return Ok(());
        }

        let index = self.index(step);
        let index_f = index.to_f64();
        let mark_f = self.mark.to_f64();
        let d0 = (mark_f - index_f) / index_f;
        let rate_f = self.funding.rate.to_f64();
        let tick = self.exchange.pair(self.pair).tick;
        let lot = self.exchange.pair(self.pair).lot;
        let best_ask = self.exchange.best_ask(self.pair);
        let best_bid = self.exchange.best_bid(self.pair);
        let position = self.positions.get(miner.account, self.pair).cloned();

        // Unwind a long once the spread has closed and holding no longer
        // pays; sell into strength only.
        if let Some(pos) = &position {
            if pos.side == PosSide::Long && d0 >= -0.002 && rate_f < miner.hold_rate {
                let qty = miner.per_step_qty.min(pos.qty).floor_to(lot);
                let limit = best_bid.unwrap_or(index).max(index).floor_to(tick);
                if qty.is_positive() && limit.is_positive() {
                    let req = OrderReq {
                        owner: miner.account,
                        pair: self.pair,
                        side: Side::Sell,
                        price: limit,
                        qty,
                        leverage: Fixed::ONE,
                        reduce_only: true,
                        tag: OrderTag::Agent,
                    };
                    if let Ok(id) = self.submit_order(req) {
                        miner.working.push(id);
                    }
                }
                return Ok(());
            }
            if pos.side == PosSide::Short && d0 <= 0.002 {
                // Close the case-2 short and repatriate the hedge.
                let qty = miner.per_step_qty.min(pos.qty).floor_to(lot);
                let limit = best_ask.unwrap_or(index).min(index).floor_to(tick);
                if qty.is_positive() && limit.is_positive() {
                    let req = OrderReq {
                        owner: miner.account,
                        pair: self.pair,
                        side: Side::Buy,
                        price: limit,
                        qty,
                        leverage: Fixed::ONE,
                        reduce_only: true,
                        tag: OrderTag::Agent,
                    };
                    if let Ok(id) = self.submit_order(req) {
                        miner.working.push(id);
                    }
                }
                if miner.case2_usd.is_positive() {
                    let usd = miner
                        .case2_usd
                        .min(self.ledger.free(miner.rw, self.outside_asset));
                    if usd.is_positive() {
                        let quote_out = self.venue.sell_usd(&mut self.ledger, miner.rw, usd)?;
                        miner.case2_usd -= usd;
                        self.send_transfer(miner.rw, miner.account, self.quote_asset, quote_out)?;
                    }
                }
                return Ok(());
            }
        }

        // Case 1: virtual price low. Buy the dip with a fully backed long,
        // funded by selling outside currency.
        if d0 < 0.0 {
            let model =
                SpreadModel::gaussian_mean_reverting(d0, miner.lambda, miner.sigma, 1.0, 201)?;
            let (_, go) = case1_opportunity(
                &model,
                d0,
                rate_f,
                miner.risk_free_outside,
                miner.confidence,
            )?;
            let edge = rate_f + model.mean() - d0 - miner.risk_free_outside * (1.0 + d0);
            if go && edge >= miner.min_edge {
                let target = best_ask
                    .map(|a| a.min(index))
                    .unwrap_or(index)
                    .floor_to(tick);
                if target.is_positive() {
                    let free = self.ledger.free(miner.account, self.quote_asset);
                    // Size within free balance including taker-fee headroom.
                    let unit_cost =
                        target.mul_down(Fixed::ONE + self.exchange.pair(self.pair).taker_fee);
                    let affordable = free.div_down(unit_cost).floor_to(lot);
                    let qty = miner.per_step_qty.min(affordable).floor_to(lot);
                    if qty.is_positive() {
                        let req = OrderReq {
                            owner: miner.account,
                            pair: self.pair,
                            side: Side::Buy,
                            price: target,
                            qty,
                            leverage: Fixed::ONE,
                            reduce_only: false,
                            tag: OrderTag::Agent,
                        };
                        if let Ok(id) = self.submit_order(req) {
                            miner.working.push(id);
                        }
                    }
                    // Refuel the pipeline: convert outside currency sized for
                    // the next tranche.
                    let usd_balance = self.ledger.free(miner.rw, self.outside_asset);
                    let usd_needed = miner.per_step_qty.mul_down(target).div_down(self.venue.mid);
                    let tranche = usd_needed.min(usd_balance);
                    if tranche.is_positive() {
                        let quote_out = self.venue.sell_usd(&mut self.ledger, miner.rw, tranche)?;
                        self.send_transfer(miner.rw, miner.account, self.quote_asset, quote_out)?;
                    }
                }
            }
        }

        // Case 2: virtual price high. Short against an outside purchase.
        if d0 > 0.0 && position.is_none() {
            let model =
                SpreadModel::gaussian_mean_reverting(d0, miner.lambda, miner.sigma, 1.0, 201)?;
            let risk_free_base = self.bank.rate.to_f64();
            let (_, go) = case2_opportunity(&model, d0, rate_f, risk_free_base, miner.confidence)?;
            let edge = rate_f.abs()
                - (model.mean() - d0 / (1.0 + risk_free_base)
                    + risk_free_base / (1.0 + risk_free_base));
            if go && edge >= miner.min_edge {
                let target = best_bid
                    .map(|b| b.max(index))
                    .unwrap_or(index)
                    .floor_to(tick);
                let free = self.ledger.free(miner.account, self.quote_asset);
                let per_unit_margin = target.mul_down(miner.margin_multiple);
                let affordable = if per_unit_margin.is_positive() {
                    free.div_down(per_unit_margin).floor_to(lot)
                } else {
                    Amount::ZERO
                };
                let qty = miner.per_step_qty.min(affordable).floor_to(lot);
                if qty.is_positive() && target.is_positive() {
                    let leverage = Fixed::ONE
                        .div_down(miner.margin_multiple)
                        .max(Fixed::from_raw(1));
                    let req = OrderReq {
                        owner: miner.account,
                        pair: self.pair,
                        side: Side::Sell,
                        price: target,
                        qty,
                        leverage,
                        reduce_only: false,
                        tag: OrderTag::Agent,
                    };
                    if let Ok(id) = self.submit_order(req) {
                        miner.working.push(id);
                        // Hedge leg: buy outside currency with quote from the
                        // real-venue balance.
                        let budget = qty
                            .mul_down(target)
                            .div_down(Fixed::ONE + self.bank.rate)
                            .min(self.ledger.free(miner.rw, self.quote_asset));
                        if budget.is_positive() {
                            let usd = self.venue.sell_quote(&mut self.ledger, miner.rw, budget)?;
                            miner.case2_usd += usd;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn after_batch(&mut self, step: u64, trades: &[Trade]) -> Result<()> {
        let pair_name = self.exchange.pair(self.pair).name.clone();
        for trade in trades {
            self.funding.record_trade(trade.price, trade.qty, step);
            self.events.push(Event::Trade {
                step,
                pair: pair_name.clone(),
                price: trade.price,
                qty: trade.qty,
                taker: self.ledger.account_name(trade.taker).to_string(),
                maker: self.ledger.account_name(trade.maker).to_string(),
                taker_fee: trade.taker_fee,
                maker_rebate: trade.maker_rebate,
            });
            // Liquidation fills.
            for (order, owner) in [
                (trade.taker_order, trade.taker),
                (trade.maker_order, trade.maker),
            ] {
                let Some(&(liq_owner, side)) = self.liq_orders.get(&order) else {
                    continue;
                };
                if liq_owner == owner {
                    let meta = self.liq_meta.get(&owner).cloned().unwrap_or(LiqMeta {
                        bankruptcy_price: trade.price,
                        trigger_index: trade.price,
                    });
                    let closed_side = match side {
                        PosSide::Long => "long",
                        PosSide::Short => "short",
                    };
                    let shortfall = match side {
                        PosSide::Short => (trade.price - meta.bankruptcy_price)
                            .max(Fixed::ZERO)
                            .mul_down(trade.qty),
                        PosSide::Long => (meta.bankruptcy_price - trade.price)
                            .max(Fixed::ZERO)
                            .mul_down(trade.qty),
                    };
                    let record = LiquidationSummary {
                        step,
                        owner: self.ledger.account_name(owner).to_string(),
                        side: closed_side.to_string(),
                        qty: trade.qty,
                        bankruptcy_price: meta.bankruptcy_price,
                        trigger_index: meta.trigger_index,
                        fill_price: trade.price,
                        shortfall,
                    };
                    self.events.push(Event::Liquidation {
                        step,
                        owner: record.owner.clone(),
                        pair: pair_name.clone(),
                        side: record.side.clone(),
                        qty: record.qty,
                        bankruptcy_price: record.bankruptcy_price,
                        fill_price: record.fill_price,
                        shortfall: record.shortfall,
                    });
                    self.liquidations.push(record);
                }
            }
        }
        // Drop liquidation-order bookkeeping for orders no longer open.
        let stale: Vec<OrderId> = self
            .liq_orders
            .keys()
            .copied()
            .filter(|id| self.exchange.order(*id).is_none())
            .collect();
        for id in stale {
            self.liq_orders.remove(&id);
        }
        self.currency.on_trades(&mut self.ledger, trades)?;

        if let Some(last) = trades.last() {
            self.mark = last.price;
        }
        if let Some(bid) = self.exchange.best_bid(self.pair) {
            self.mark = self.mark.max(bid);
        }
        if let Some(ask) = self.exchange.best_ask(self.pair) {
            self.mark = self.mark.min(ask);
        }
        Ok(())
    }

    fn margin_call_phase(&mut self, step: u64) -> Result<()> {
        let index = self.index(step);
        let params = self.exchange.pair(self.pair).margin;
        let staleness = self.exchange.pair(self.pair).staleness_bound;
        let calls = match self
            .positions
            .run_margin_calls(self.pair, &params, index, 0, staleness)
        {
            Ok(calls) => calls,
            Err(e) => {
                self.events.push(Event::Note {
                    step,
                    text: format!("margin calls skipped: {e}"),
                });
                return Ok(());
            }
        };
        let pair_name = self.exchange.pair(self.pair).name.clone();
        for call in &calls {
            self.exchange
                .cancel_all(&mut self.ledger, call.owner, self.pair)?;
            self.liq_meta.insert(
                call.owner,
                LiqMeta {
                    bankruptcy_price: call.bankruptcy_price,
                    trigger_index: call.trigger_index,
                },
            );
            self.events.push(Event::MarginCall {
                step,
                owner: self.ledger.account_name(call.owner).to_string(),
                pair: pair_name.clone(),
                side: match call.side {
                    PosSide::Long => "long".into(),
                    PosSide::Short => "short".into(),
                },
                qty: call.qty,
                bankruptcy_price: call.bankruptcy_price,
                trigger_index: call.trigger_index,
            });
        }

        // (Re)price one liquidation order per flagged position.
        let band = params.liquidation_band;
        let tick = self.exchange.pair(self.pair).tick;
        let flagged: Vec<(AccountId, PosSide, Amount, Price)> = self
            .positions
            .iter_pair(self.pair)
            .filter(|p| p.in_liquidation)
            .map(|p| (p.owner, p.side, p.qty, p.bankruptcy_price()))
            .collect();
        for (owner, side, qty, bankruptcy) in flagged {
            let existing: Vec<OrderId> = self
                .liq_orders
                .iter()
                .filter(|(_, (o, _))| *o == owner)
                .map(|(id, _)| *id)
                .collect();
            for id in existing {
                if self.exchange.order(id).is_some() {
                    self.exchange.cancel(&mut self.ledger, owner, id)?;
                }
                self.liq_orders.remove(&id);
            }
            // Chase the market on re-submission so gaps cannot strand the
            // close.
            let (order_side, limit) = match side {
                PosSide::Long => (
                    Side::Sell,
                    bankruptcy
                        .min(index)
                        .mul_down(Fixed::ONE - band)
                        .floor_to(tick)
                        .max(tick),
                ),
                PosSide::Short => (
                    Side::Buy,
                    bankruptcy
                        .max(index)
                        .mul_down(Fixed::ONE + band)
                        .floor_to(tick)
                        .max(tick),
                ),
            };
            let id = self.submit_order(OrderReq {
                owner,
                pair: self.pair,
                side: order_side,
                price: limit,
                qty,
                leverage: Fixed::ONE,
                reduce_only: true,
                tag: OrderTag::Liquidation,
            })?;
            self.liq_orders.insert(id, (owner, side));
        }
        Ok(())
    }

    fn funding_phase(&mut self, step: u64) -> Result<()> {
        if step == 0 {
            return Ok(());
        }
        let swap_now = step.is_multiple_of(self.funding.params.swap_period);
        let measure_now = step.is_multiple_of(self.funding.params.measure_period);
        if !swap_now && !measure_now {
            return Ok(());
        }
        let mut total_swapped = Amount::ZERO;
        let mut residue = Amount::ZERO;
        if swap_now {
            let index = self.index(step);
            let rate = self.funding.rate;
            let settlement = swap::execute_swap(
                &mut self.ledger,
                &mut self.positions,
                self.pair,
                self.quote_asset,
                self.sys.fee_sink,
                index,
                rate,
                self.funding.params.haircut,
            )?;
            self.bank.record_swap_rate(rate);
            for transfer in &settlement.transfers {
                if transfer.account == self.sys.currency_service {
                    self.bank.record_service_swap_loss(-transfer.amount);
                }
            }
            total_swapped = settlement.total_swapped;
            residue = settlement.residue;
            self.funding.last_swap_step = step;
        }
        let mut vwdev = Fixed::ZERO;
        if measure_now {
            let window = self.funding.window_trades.clone();
            let history = &self.index_history;
            let sample = swap::measure(&window, |s| history.get(&s).copied())?;
            vwdev = sample.vwdev;
            swap::update_rate(&mut self.funding, sample);
        }
        self.events.push(Event::Funding {
            step,
            pair: self.exchange.pair(self.pair).name.clone(),
            vwdev,
            r: self.funding.rate,
            total_swapped,
            residue,
        });
        Ok(())
    }

    fn bank_phase(&mut self, step: u64) -> Result<()> {
        if step == 0 || !step.is_multiple_of(self.config.central_bank.period) {
            return Ok(());
        }
        self.bank.release_expired(&mut self.ledger, step)?;
        self.bank.set_rate();
        let service_margin = self
            .positions
            .get(self.sys.currency_service, self.pair)
            .map(|p| p.margin)
            .unwrap_or(Amount::ZERO);
        let service_interest = service_margin.mul_down(self.bank.rate);
        let report = self.bank.accrue_and_pay(
            &mut self.ledger,
            self.sys.fee_sink,
            step,
            &[(self.sys.currency_service, service_margin)],
        )?;
        self.bank.record_service_interest(service_interest);
        self.events.push(Event::Rate {
            step,
            r_e: report.rate,
            pool_used: report.pool_used,
            minted: report.minted,
        });
        let solvency = self.bank.solvency_check();
        self.events.push(Event::Solvency {
            step,
            headroom: solvency.headroom,
            ok: solvency.ok,
        });
        self.last_headroom = solvency.headroom;
        self.last_solvency_ok = solvency.ok;
        Ok(())
    }

    fn finish_step(&mut self, step: u64) -> Result<()> {
        let index = self.index(step);
        let spread = (self.mark - index).div_down(index);
        let open_interest: Amount = self
            .positions
            .iter_pair(self.pair)
            .filter(|p| p.side == PosSide::Long)
            .map(|p| p.qty)
            .sum();

        // Accumulate realized PnL per account from the journal, then emit
        // balance events.
        let journal = self.ledger.drain_journal();
        for change in &journal {
            if change.reason == "trade_pnl" {
                *self
                    .realized_by_account
                    .entry(change.account.clone())
                    .or_default() += change.delta;
            }
            self.events.push(Event::Balance {
                step,
                account: change.account.clone(),
                asset: change.asset.clone(),
                delta: change.delta,
                reason: change.reason.to_string(),
            });
        }

        let miner_pnl = self.miner_wealth(index) - self.miner_initial_wealth;
        let reserve_balance = self
            .ledger
            .balance(self.sys.reserve, self.quote_asset)
            .total();
        let frame = MetricsFrame {
            step,
            real_index: index,
            virtual_mark: self.mark,
            spread,
            swap_rate: self.funding.rate,
            open_interest,
            miner_pnl,
            reserve_balance,
            outstanding_pegged: self.currency.outstanding,
            solvency_headroom: self.last_headroom,
        };
        self.frames.push(frame);
        self.append_agent_rows(step, index);
        self.check_invariants()?;
        Ok(())
    }

    fn miner_wealth(&self, index: Price) -> Amount {
        let mut wealth = Amount::ZERO;
        for agent in &self.agents {
            if let AgentState::ArbMiner(m) = &agent.state {
                wealth += self.ledger.balance(m.account, self.quote_asset).total();
                wealth += self.ledger.balance(m.rw, self.quote_asset).total();
                wealth += self
                    .ledger
                    .balance(m.rw, self.outside_asset)
                    .total()
                    .mul_down(index);
                if let Some(pos) = self.positions.get(m.account, self.pair) {
                    wealth += pos.equity(index) - pos.margin;
                }
            }
        }
        wealth
    }

    fn append_agent_rows(&mut self, step: u64, index: Price) {
        let mut rows = String::new();
        for agent in &self.agents {
            let (account, rw) = match &agent.state {
                AgentState::MarketMaker { account, .. } => (*account, None),
                AgentState::ArbMiner(m) => (m.account, Some(m.rw)),
                _ => continue,
            };
            let (position, unrealized) = match self.positions.get(account, self.pair) {
                Some(p) => {
                    let signed = if p.side == PosSide::Long {
                        p.qty
                    } else {
                        -p.qty
                    };
                    (signed, p.equity(index) - p.margin)
                }
                None => (Amount::ZERO, Amount::ZERO),
            };
            let realized = self
                .realized_by_account
                .get(self.ledger.account_name(account))
                .copied()
                .unwrap_or(Amount::ZERO);
            rows.push_str(&format!(
                "{},{},exchange,{},{},{}\n",
                step, agent.name, position, realized, unrealized
            ));
            if let Some(rw) = rw {
                let usd = self.ledger.balance(rw, self.outside_asset).total();
                rows.push_str(&format!("{},{},real,{},0,0\n", step, agent.name, usd));
            }
        }
        self.agents_csv.push_str(&rows);
    }

    /// Recomputed every step: conservation, pegged-token backing, the
    /// clearing-pool zero-sum identity, and the locked-balance ledger
    /// identity.
    pub fn check_invariants(&mut self) -> Result<()> {
        let result = self.check_invariants_inner();
        if result.is_err() {
            self.invariant_violations += 1;
        }
        result
    }

    fn check_invariants_inner(&self) -> Result<()> {
        self.ledger.check_conservation()?;
        self.currency.check_backing(&self.positions)?;
        let supply = self.ledger.minted_total(self.pegged_asset)
            - self.ledger.burned_total(self.pegged_asset);
        if supply != self.currency.outstanding {
            return Err(Error::InvariantViolation(format!(
                "pegged supply {supply} differs from outstanding {}",
                self.currency.outstanding
            )));
        }
        let pool_delta = self
            .ledger
            .balance(self.sys.clearing_pool, self.quote_asset)
            .total()
            - self.clearing_pool_initial;
        self.positions.check_zero_sum(self.pair, pool_delta)?;

        let mut expected_locked = Amount::ZERO;
        for pos in self.positions.iter() {
            expected_locked += pos.margin;
        }
        for order in self.exchange.open_orders(self.pair) {
            expected_locked += order.reserved_margin;
        }
        for stake in self.bank.stakes() {
            expected_locked += stake.amount;
        }
        let actual_locked: Amount = self
            .ledger
            .accounts()
            .map(|a| self.ledger.locked(a, self.quote_asset))
            .sum();
        if expected_locked != actual_locked {
            return Err(Error::InvariantViolation(format!(
                "locked identity broken: margins+reservations+stakes {expected_locked} vs ledger {actual_locked}"
            )));
        }
        Ok(())
    }

    pub fn agents_csv(&self) -> &str {
        &self.agents_csv
    }

    /// Orders currently open for an account (test/diagnostic helper).
    pub fn open_orders_of(&self, owner: AccountId) -> Vec<Order> {
        self.exchange
            .open_orders(self.pair)
            .filter(|o| o.owner == owner)
            .cloned()
            .collect()
    }
}
