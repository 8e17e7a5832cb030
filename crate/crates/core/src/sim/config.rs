//! Scenario configuration: a versioned JSON schema validated on load.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Amount, Fixed, Price};
use crate::sim::venue::VenueConfig;

/// Complete simulation input. `seed` and `steps` are required; most knobs
/// have protocol defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub seed: u64,
    pub steps: u64,
    pub pair: PairCfg,
    #[serde(default)]
    pub controller: ControllerCfg,
    #[serde(default)]
    pub oracle: OracleCfg,
    #[serde(default)]
    pub central_bank: BankCfg,
    #[serde(default)]
    pub currency_service: CurrencyCfg,
    pub real_venue: VenueConfig,
    #[serde(default)]
    pub system: SystemCfg,
    #[serde(default)]
    pub agents: Vec<AgentCfg>,
    #[serde(default)]
    pub shocks: Vec<ShockCfg>,
    #[serde(default)]
    pub metrics: MetricsCfg,
}

fn default_version() -> u32 {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairCfg {
    /// e.g. "USD/EXM"
    pub name: String,
    /// Base (virtual) asset symbol, e.g. "USD".
    pub base: String,
    /// Quote asset symbol, e.g. "EXM"; the margin and settlement token.
    pub quote: String,
    #[serde(default = "default_tick")]
    pub tick: Price,
    #[serde(default = "default_lot")]
    pub lot: Amount,
    /// Taker fee fraction (default 10 bps).
    #[serde(default = "default_taker_fee")]
    pub taker_fee: Fixed,
    /// Maker rebate fraction (default 8 bps).
    #[serde(default = "default_maker_rebate")]
    pub maker_rebate: Fixed,
    #[serde(default = "default_max_leverage")]
    pub max_leverage: Fixed,
    #[serde(default)]
    pub maintenance_ratio: Fixed,
    #[serde(default = "default_liq_band")]
    pub liquidation_band: Fixed,
    #[serde(default = "default_staleness")]
    pub staleness_bound: u64,
}

fn default_tick() -> Price {
    "0.01".parse().unwrap()
}
fn default_lot() -> Amount {
    "0.000001".parse().unwrap()
}
fn default_taker_fee() -> Fixed {
    "0.001".parse().unwrap()
}
fn default_maker_rebate() -> Fixed {
    "0.0008".parse().unwrap()
}
fn default_max_leverage() -> Fixed {
    Fixed::from_int(2)
}
fn default_liq_band() -> Fixed {
    "0.05".parse().unwrap()
}
fn default_staleness() -> u64 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerCfg {
    #[serde(default = "default_gain")]
    pub gain: Fixed,
    #[serde(default = "default_rate_min")]
    pub rate_min: Fixed,
    #[serde(default = "default_rate_max")]
    pub rate_max: Fixed,
    #[serde(default = "default_period")]
    pub swap_period: u64,
    #[serde(default = "default_period")]
    pub measure_period: u64,
    #[serde(default)]
    pub haircut: Fixed,
}

fn default_gain() -> Fixed {
    "0.1".parse().unwrap()
}
fn default_rate_min() -> Fixed {
    "-0.05".parse().unwrap()
}
fn default_rate_max() -> Fixed {
    "0.05".parse().unwrap()
}
fn default_period() -> u64 {
    16
}

impl Default for ControllerCfg {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleCfg {
    #[serde(default = "default_sample")]
    pub sample_size: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: Fixed,
    #[serde(default = "default_reward")]
    pub reward: Amount,
    #[serde(default = "default_slash")]
    pub slash: Amount,
    #[serde(default = "default_deposit_min")]
    pub deposit_min: Amount,
}

fn default_sample() -> usize {
    7
}
fn default_tolerance() -> Fixed {
    "0.01".parse().unwrap()
}
fn default_reward() -> Amount {
    "0.1".parse().unwrap()
}
fn default_slash() -> Amount {
    Fixed::from_int(10)
}
fn default_deposit_min() -> Amount {
    Fixed::from_int(100)
}

impl Default for OracleCfg {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankCfg {
    /// Steps per central-bank period.
    #[serde(default = "default_period")]
    pub period: u64,
    /// Periods of swap-rate history in the long-term rate.
    #[serde(default = "default_horizon")]
    pub rate_horizon: usize,
    /// Safety spread per period on the long-term rate.
    #[serde(default = "default_rate_margin")]
    pub rate_margin: Fixed,
    #[serde(default = "default_horizon")]
    pub solvency_horizon: usize,
    /// Default stake lock duration in steps.
    #[serde(default = "default_lock")]
    pub lock_steps: u64,
}

fn default_horizon() -> usize {
    100
}
fn default_rate_margin() -> Fixed {
    "0.001".parse().unwrap()
}
fn default_lock() -> u64 {
    480
}

impl Default for BankCfg {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrencyCfg {
    #[serde(default = "default_token")]
    pub token: String,
    /// Conversion fee fraction (default 10 bps).
    #[serde(default = "default_conv_fee")]
    pub fee: Fixed,
}

fn default_token() -> String {
    "USDE".to_string()
}
fn default_conv_fee() -> Fixed {
    "0.001".parse().unwrap()
}

impl Default for CurrencyCfg {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemCfg {
    /// Operations float endowed to the fee sink.
    #[serde(default = "default_sink_float")]
    pub fee_sink_float: Amount,
    /// Reserve endowment (market making margin + liquidation backstop).
    #[serde(default = "default_reserve_float")]
    pub reserve_float: Amount,
    /// Clearing-pool float backing profit settlement.
    #[serde(default = "default_big_float")]
    pub clearing_float: Amount,
    /// Venue pool endowments (quote and outside currency).
    #[serde(default = "default_big_float")]
    pub venue_float: Amount,
}

fn default_sink_float() -> Amount {
    Fixed::from_int(1_000)
}
fn default_reserve_float() -> Amount {
    Fixed::from_int(100_000)
}
fn default_big_float() -> Amount {
    Fixed::from_int(1_000_000_000)
}

impl Default for SystemCfg {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

/// Agent fleet entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentCfg {
    /// Quotes a ladder around the index.
    MarketMaker {
        name: String,
        /// Trade on the system reserve account instead of own funds.
        #[serde(default)]
        use_reserve: bool,
        #[serde(default)]
        funds: Amount,
        half_spread: Price,
        #[serde(default = "default_level_gap")]
        level_gap: Price,
        #[serde(default = "default_levels")]
        levels: u32,
        level_qty: Amount,
        inventory_cap: Amount,
    },
    /// Cross-venue statistical arbitrageur (case-1 when the virtual price is
    /// low, case-2 when it is high).
    ArbMiner {
        name: String,
        #[serde(default = "default_one")]
        count: u32,
        /// Outside currency at the real venue.
        usd_funds: Amount,
        /// Quote funds at the exchange.
        #[serde(default)]
        exm_funds: Amount,
        /// Staked deposit (oracle eligibility; also earns interest).
        #[serde(default)]
        stake: Amount,
        /// Base quantity per step and miner.
        per_step_qty: Amount,
        #[serde(default = "default_confidence")]
        confidence: f64,
        /// Required expected edge per unit (fraction).
        #[serde(default = "default_min_edge")]
        min_edge: f64,
        /// Mean-reversion rate of the spread belief.
        #[serde(default = "default_lambda")]
        lambda: f64,
        /// Belief standard deviation.
        #[serde(default = "default_sigma")]
        sigma: f64,
        /// Per-period outside risk-free return.
        #[serde(default = "default_risk_free")]
        risk_free_outside: f64,
        /// Keep positions while the swap rate pays at least this much.
        #[serde(default = "default_hold_rate")]
        hold_rate: f64,
        /// Margin multiple for case-2 shorts.
        #[serde(default = "default_margin_multiple")]
        margin_multiple: Fixed,
        /// Oracle report bias (0 = honest).
        #[serde(default)]
        bias: f64,
    },
    /// Scripted seller anchored to the pre-shock price.
    PanicSeller {
        name: String,
        funds: Amount,
        start_step: u64,
        /// Steps over which the flow arrives.
        duration: u64,
        per_step_qty: Amount,
        total_qty: Amount,
        #[serde(default = "default_panic_leverage")]
        leverage: Fixed,
        /// Anchor price factor applied to the pre-shock index.
        #[serde(default = "default_one_fixed")]
        anchor_factor: Fixed,
    },
    /// Buys a small clip at the current mark every step (background flow
    /// that keeps executed-price measurement alive).
    FlowBuyer {
        name: String,
        #[serde(default = "default_one")]
        count: u32,
        funds: Amount,
        per_step_qty: Amount,
    },
    /// Staked account that reports the index (optionally biased).
    Reporter {
        name: String,
        #[serde(default = "default_one")]
        count: u32,
        stake: Amount,
        #[serde(default)]
        bias: f64,
        #[serde(default)]
        funds: Amount,
    },
    /// Issues/redeems pegged tokens on a schedule.
    ConversionClient {
        name: String,
        funds: Amount,
        schedule: Vec<ConversionStep>,
    },
    /// One-shot limit sell with explicit margin (leverage arithmetic cases).
    ShortSeller {
        name: String,
        funds: Amount,
        step: u64,
        qty: Amount,
        price: Price,
        leverage: Fixed,
    },
    /// One-shot limit buy.
    TakerBuyer {
        name: String,
        funds: Amount,
        step: u64,
        qty: Amount,
        price: Price,
    },
}

fn default_level_gap() -> Price {
    "0.5".parse().unwrap()
}
fn default_levels() -> u32 {
    1
}
fn default_one() -> u32 {
    1
}
fn default_confidence() -> f64 {
    0.6
}
fn default_min_edge() -> f64 {
    0.001
}
fn default_lambda() -> f64 {
    0.02
}
fn default_sigma() -> f64 {
    0.02
}
fn default_risk_free() -> f64 {
    0.0005
}
fn default_hold_rate() -> f64 {
    0.005
}
fn default_margin_multiple() -> Fixed {
    Fixed::from_int(3)
}
fn default_panic_leverage() -> Fixed {
    "0.5".parse().unwrap()
}
fn default_one_fixed() -> Fixed {
    Fixed::ONE
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversionStep {
    pub step: u64,
    pub action: ConversionAction,
    pub amount: Amount,
    #[serde(default)]
    pub limit_price: Option<Price>,
    #[serde(default)]
    pub deadline_step: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionAction {
    Issue,
    Redeem,
}

/// Scheduled disturbances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShockCfg {
    pub step: u64,
    #[serde(flatten)]
    pub kind: ShockKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShockKind {
    /// Multiplies the outside mid price.
    PriceJump { factor: f64 },
    /// Moves a fraction of an account's free quote into an inert vault.
    CapitalRemoval { account: String, fraction: Fixed },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsCfg {
    /// Spread band for peg restoration.
    #[serde(default = "default_epsilon")]
    pub epsilon: Fixed,
    /// Consecutive in-band steps required.
    #[serde(default = "default_persistence")]
    pub persistence: u64,
}

fn default_epsilon() -> Fixed {
    "0.01".parse().unwrap()
}
fn default_persistence() -> u64 {
    10
}

impl Default for MetricsCfg {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

impl ScenarioConfig {
    pub fn from_json(json: &str) -> Result<ScenarioConfig> {
        let config: ScenarioConfig =
            serde_json::from_str(json).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<ScenarioConfig> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::ConfigInvalid(msg.to_string()));
        if self.version != 1 {
            return fail("unsupported config version");
        }
        if self.steps == 0 {
            return fail("steps must be positive");
        }
        if self.pair.base == self.pair.quote {
            return fail("pair base and quote must differ");
        }
        if !self.pair.tick.is_positive() || !self.pair.lot.is_positive() {
            return fail("tick and lot must be positive");
        }
        if self.pair.maker_rebate > self.pair.taker_fee {
            return fail("maker rebate must not exceed taker fee");
        }
        if self.pair.max_leverage < Fixed::ONE {
            return fail("max leverage must be at least 1");
        }
        if self.pair.maintenance_ratio.is_negative() || self.pair.maintenance_ratio >= Fixed::ONE {
            return fail("maintenance ratio must be in [0, 1)");
        }
        if self.controller.rate_min >= self.controller.rate_max
            || !self.controller.rate_min.is_negative()
            || !self.controller.rate_max.is_positive()
        {
            return fail("rate clamp must satisfy rate_min < 0 < rate_max");
        }
        if self.controller.swap_period == 0 || self.controller.measure_period == 0 {
            return fail("controller periods must be positive");
        }
        if self.oracle.sample_size < 3 || self.oracle.sample_size.is_multiple_of(2) {
            return fail("oracle sample size must be odd and at least 3");
        }
        if !self.oracle.tolerance.is_positive() {
            return fail("oracle tolerance must be positive");
        }
        if self.central_bank.period == 0 {
            return fail("central bank period must be positive");
        }
        if !self.metrics.epsilon.is_positive() || self.metrics.persistence == 0 {
            return fail("metrics epsilon must be positive and persistence at least 1");
        }
        self.real_venue.process.validate()?;

        let mut names = BTreeSet::new();
        for agent in &self.agents {
            let (name, count) = match agent {
                AgentCfg::MarketMaker { name, .. } => (name.clone(), 1),
                AgentCfg::ArbMiner { name, count, .. } => (name.clone(), *count),
                AgentCfg::PanicSeller { name, .. } => (name.clone(), 1),
                AgentCfg::FlowBuyer { name, count, .. } => (name.clone(), *count),
                AgentCfg::Reporter { name, count, .. } => (name.clone(), *count),
                AgentCfg::ConversionClient { name, .. } => (name.clone(), 1),
                AgentCfg::ShortSeller { name, .. } => (name.clone(), 1),
                AgentCfg::TakerBuyer { name, .. } => (name.clone(), 1),
            };
            if count == 0 {
                return fail("agent count must be positive");
            }
            if !names.insert(name.clone()) {
                return Err(Error::ConfigInvalid(format!("duplicate agent name {name}")));
            }
            if let AgentCfg::PanicSeller { start_step, .. } = agent {
                if *start_step == 0 {
                    return fail("panic seller needs start_step >= 1 (anchors to the prior index)");
                }
            }
        }
        for shock in &self.shocks {
            if shock.step >= self.steps {
                return fail("shock scheduled beyond scenario end");
            }
            if let ShockKind::CapitalRemoval { account, fraction } = &shock.kind {
                let known = account == "reserve" || names.contains(account);
                if !known {
                    return Err(Error::ConfigInvalid(format!(
                        "capital removal references unknown account {account}"
                    )));
                }
                if fraction.is_negative() || *fraction > Fixed::ONE {
                    return fail("capital removal fraction must be in [0, 1]");
                }
            }
        }
        Ok(())
    }

    /// First shock step, or 0 if the scenario has none.
    pub fn shock_step(&self) -> u64 {
        self.shocks.iter().map(|s| s.step).min().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        r#"{
            "seed": 1,
            "steps": 10,
            "pair": {"name": "USD/EXM", "base": "USD", "quote": "EXM"},
            "real_venue": {"process": {"type": "ramp", "points": [[0, 100.0]]}}
        }"#
        .to_string()
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ScenarioConfig::from_json(&minimal()).unwrap();
        assert_eq!(cfg.version, 1);
        assert_eq!(cfg.controller.swap_period, 16);
        assert_eq!(cfg.oracle.sample_size, 7);
        assert_eq!(cfg.metrics.persistence, 10);
    }

    #[test]
    fn missing_seed_is_invalid() {
        let json = minimal().replace("\"seed\": 1,", "");
        let err = ScenarioConfig::from_json(&json).unwrap_err();
        assert!(matches!(err, Error::ConfigInvalid(msg) if msg.contains("seed")));
    }

    #[test]
    fn base_equal_quote_rejected() {
        let json = minimal().replace("\"base\": \"USD\"", "\"base\": \"EXM\"");
        assert!(ScenarioConfig::from_json(&json).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let json = minimal().replace("\"steps\": 10,", "\"steps\": 10, \"stepz\": 2,");
        assert!(ScenarioConfig::from_json(&json).is_err());
    }
}
