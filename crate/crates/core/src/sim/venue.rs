//! The outside market: a mid-price process with infinite depth at the mid
//! plus a taker fee, and delayed transfers between venues.
//!
//! Prices evolve in floating point, then quantize to the pair tick before
//! any money math. Trades settle through ledger accounts (a large venue
//! pool), so conservation covers the outside balances too.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_pcg::Pcg64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Amount, Fixed, Price};
use crate::ledger::{AccountId, AssetId, Ledger};
use crate::oracle::stream_seed;

/// Mid-price process configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProcessConfig {
    /// Geometric Brownian motion with per-step drift and volatility.
    Gbm { start: f64, mu: f64, sigma: f64 },
    /// Ornstein-Uhlenbeck mean reversion (per-step theta, sigma).
    Ou {
        start: f64,
        theta: f64,
        mean: f64,
        sigma: f64,
    },
    /// Piecewise linear ramp between (step, price) anchor points; holds the
    /// last price after the final anchor.
    Ramp { points: Vec<(u64, f64)> },
}

impl ProcessConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ProcessConfig::Gbm { start, sigma, .. } => *start > 0.0 && *sigma >= 0.0,
            ProcessConfig::Ou { start, sigma, .. } => *start > 0.0 && *sigma >= 0.0,
            ProcessConfig::Ramp { points } => {
                !points.is_empty()
                    && points.iter().all(|p| p.1 > 0.0)
                    && points.windows(2).all(|w| w[0].0 < w[1].0)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ConfigInvalid("invalid price process".into()))
        }
    }
}

/// Running price process state.
pub struct PriceProcess {
    config: ProcessConfig,
    level: f64,
    rng: Pcg64,
    /// Multiplicative shock factor folded into the level.
    jump: f64,
}

impl PriceProcess {
    pub fn new(config: ProcessConfig, seed: u64) -> PriceProcess {
        let level = match &config {
            ProcessConfig::Gbm { start, .. } | ProcessConfig::Ou { start, .. } => *start,
            ProcessConfig::Ramp { points } => points[0].1,
        };
        PriceProcess {
            config,
            level,
            rng: Pcg64::seed_from_u64(stream_seed(seed, 0x76656e7565, 0)),
            jump: 1.0,
        }
    }

    /// Advances to `step` and returns the new mid level.
    pub fn advance(&mut self, step: u64) -> f64 {
        match &self.config {
            ProcessConfig::Gbm { mu, sigma, .. } => {
                if step > 0 {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    self.level *= ((mu - 0.5 * sigma * sigma) + sigma * z).exp();
                }
            }
            ProcessConfig::Ou {
                theta, mean, sigma, ..
            } => {
                if step > 0 {
                    let z: f64 = StandardNormal.sample(&mut self.rng);
                    self.level += theta * (mean * self.jump - self.level) + sigma * z;
                    if self.level <= 0.0 {
                        self.level = f64::MIN_POSITIVE;
                    }
                }
            }
            ProcessConfig::Ramp { points } => {
                let base = ramp_value(points, step);
                self.level = base * self.jump;
            }
        }
        self.level
    }

    /// Applies a multiplicative price jump.
    pub fn apply_jump(&mut self, factor: f64) {
        self.level *= factor;
        self.jump *= factor;
    }
}

fn ramp_value(points: &[(u64, f64)], step: u64) -> f64 {
    if step <= points[0].0 {
        return points[0].1;
    }
    for w in points.windows(2) {
        let (s0, p0) = w[0];
        let (s1, p1) = w[1];
        if step <= s1 {
            let f = (step - s0) as f64 / (s1 - s0) as f64;
            return p0 + (p1 - p0) * f;
        }
    }
    points.last().unwrap().1
}

/// Venue configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VenueConfig {
    pub process: ProcessConfig,
    /// Taker fee as a fraction of notional on venue trades.
    #[serde(default)]
    pub taker_fee: Fixed,
    /// Steps a cross-venue transfer spends in transit.
    #[serde(default = "default_delay")]
    pub transfer_delay: u64,
    /// Reported volume used for index weighting.
    #[serde(default = "default_volume")]
    pub volume: Amount,
}

fn default_delay() -> u64 {
    1
}

fn default_volume() -> Amount {
    Fixed::from_int(1_000_000)
}

/// The outside exchange: infinite depth at the tick-quantized mid.
pub struct RealVenue {
    pub mid: Price,
    pub taker_fee: Fixed,
    pub transfer_delay: u64,
    pub volume: Amount,
    process: PriceProcess,
    tick: Price,
    pool: AccountId,
    usd: AssetId,
    quote: AssetId,
}

impl RealVenue {
    pub fn new(
        config: &VenueConfig,
        seed: u64,
        tick: Price,
        pool: AccountId,
        usd: AssetId,
        quote: AssetId,
    ) -> RealVenue {
        let mut process = PriceProcess::new(config.process.clone(), seed);
        let level = process.advance(0);
        RealVenue {
            mid: quantize(level, tick),
            taker_fee: config.taker_fee,
            transfer_delay: config.transfer_delay,
            volume: config.volume,
            process,
            tick,
            pool,
            usd,
            quote,
        }
    }

    pub fn advance(&mut self, step: u64) {
        let level = self.process.advance(step);
        self.mid = quantize(level, self.tick);
    }

    pub fn apply_jump(&mut self, factor: f64) {
        self.process.apply_jump(factor);
        self.mid = quantize(self.process.level, self.tick);
    }

    /// Sells outside currency for quote at the mid, fee on the proceeds.
    pub fn sell_usd(
        &mut self,
        ledger: &mut Ledger,
        account: AccountId,
        usd: Amount,
    ) -> Result<Amount> {
        let gross = usd.mul_down(self.mid);
        let fee = gross.mul_down(self.taker_fee);
        let net = gross - fee;
        ledger.transfer(account, self.pool, self.usd, usd, "venue_trade")?;
        ledger.transfer(self.pool, account, self.quote, net, "venue_trade")?;
        Ok(net)
    }

    /// Sells quote for outside currency at the mid, fee on the proceeds.
    pub fn sell_quote(
        &mut self,
        ledger: &mut Ledger,
        account: AccountId,
        quote: Amount,
    ) -> Result<Amount> {
        let gross = quote.div_down(self.mid);
        let fee = gross.mul_down(self.taker_fee);
        let net = gross - fee;
        ledger.transfer(account, self.pool, self.quote, quote, "venue_trade")?;
        ledger.transfer(self.pool, account, self.usd, net, "venue_trade")?;
        Ok(net)
    }
}

/// Quantizes a float price to the tick grid (nearest, at least one tick).
pub fn quantize(level: f64, tick: Price) -> Price {
    let ticks = (level / tick.to_f64()).round().max(1.0);
    tick.mul_int(ticks as i64)
}
