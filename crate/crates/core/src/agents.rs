//! Strategy analytics for the programmatic actors.
//!
//! The cross-venue arbitrage strategies trade the relative spread
//! `d = (b - a) / a` between the virtual price `b` and the outside price
//! `a`. With swap rate `r` per holding period and risk-free returns `R_D`
//! (outside currency) and `R_E` (base token):
//!
//! - Case 1 (virtual price low, `d0 < 0`): buy the base on the virtual
//!   venue, funded by selling it outside. Profitable when
//!   `r > d0 - dt + R_D (1 + d0)`, i.e. when the realized `dt` clears
//!   `Q(r) = -r + d0 + R_D (1 + d0)`.
//! - Case 2 (virtual price high, `d0 > 0`): short the base on the virtual
//!   venue against an outside purchase. Profitable when
//!   `|r| > dt - d0 / (1 + R_E) + R_E / (1 + R_E)`.
//!
//! Modeling `dt` as a random variable, the fraction of participants who see
//! an opportunity at rate `r` is the model mass strictly beyond the
//! threshold; raising `|r|` can always push that fraction to one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::{Amount, Fixed, Price};

/// Tolerance on total probability mass.
const MASS_TOLERANCE: f64 = 1e-12;

/// Discrete belief distribution over the future spread `dt`.
#[derive(Debug, Clone)]
pub struct SpreadModel {
    /// (spread value, probability), sorted by value.
    bins: Vec<(f64, f64)>,
}

impl SpreadModel {
    /// Builds a model from explicit bins. Mass must sum to one (within
    /// 1e-12) and the support must lie in `[-1, inf)`.
    pub fn from_bins(mut bins: Vec<(f64, f64)>) -> Result<SpreadModel> {
        if bins.is_empty() {
            return Err(Error::ConfigInvalid("empty spread model".into()));
        }
        let mass: f64 = bins.iter().map(|b| b.1).sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::ConfigInvalid(format!(
                "spread model mass {mass} != 1"
            )));
        }
        if bins.iter().any(|b| b.0 < -1.0 || b.1 < 0.0) {
            return Err(Error::ConfigInvalid(
                "spread support must lie in [-1, inf) with non-negative mass".into(),
            ));
        }
        bins.sort_by(|x, y| x.0.total_cmp(&y.0));
        Ok(SpreadModel { bins })
    }

    /// Mean-reverting Gaussian belief: `dt ~ Normal(d0 * exp(-lambda * t),
    /// sigma^2)`, discretized to `n` bins on [-1, 1] with the tails absorbed
    /// into the end bins.
    pub fn gaussian_mean_reverting(
        d0: f64,
        lambda: f64,
        sigma: f64,
        t: f64,
        n: usize,
    ) -> Result<SpreadModel> {
        if sigma <= 0.0 || n < 3 {
            return Err(Error::ConfigInvalid(
                "sigma must be positive and n >= 3".into(),
            ));
        }
        let mean = d0 * (-lambda * t).exp();
        let width = 2.0 / n as f64;
        let mut bins = Vec::with_capacity(n);
        for i in 0..n {
            let lo = -1.0 + i as f64 * width;
            let hi = lo + width;
            let mass = if i == 0 {
                normal_cdf((hi - mean) / sigma)
            } else if i == n - 1 {
                1.0 - normal_cdf((lo - mean) / sigma)
            } else {
                normal_cdf((hi - mean) / sigma) - normal_cdf((lo - mean) / sigma)
            };
            bins.push((lo + width / 2.0, mass));
        }
        // Numerical dust from the CDF approximation.
        let total: f64 = bins.iter().map(|b| b.1).sum();
        for b in &mut bins {
            b.1 /= total;
        }
        SpreadModel::from_bins(bins)
    }

    pub fn bins(&self) -> &[(f64, f64)] {
        &self.bins
    }

    /// Probability mass strictly above `q`.
    pub fn mass_above(&self, q: f64) -> f64 {
        self.bins.iter().filter(|b| b.0 > q).map(|b| b.1).sum()
    }

    /// Probability mass strictly below `q`.
    pub fn mass_below(&self, q: f64) -> f64 {
        self.bins.iter().filter(|b| b.0 < q).map(|b| b.1).sum()
    }

    pub fn mean(&self) -> f64 {
        self.bins.iter().map(|b| b.0 * b.1).sum()
    }
}

/// Standard normal CDF, Abramowitz-Stegun 7.1.26 (|error| < 1.5e-7).
pub fn normal_cdf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs() / std::f64::consts::SQRT_2;
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = 1.0 - poly * (-x * x).exp();
    0.5 * (1.0 + sign * erf)
}

/// Relative spread `(b - a) / a`.
pub fn spread(a: f64, b: f64) -> f64 {
    assert!(a > 0.0, "reference price must be positive");
    (b - a) / a
}

/// Case-1 break-even future spread: `Q(r) = -r + d0 + R_D (1 + d0)`.
pub fn case1_threshold(r: f64, d0: f64, risk_free_outside: f64) -> f64 {
    -r + d0 + risk_free_outside * (1.0 + d0)
}

/// Fraction of modeled participants who see a case-1 opportunity at rate
/// `r`: the model mass strictly above `Q(r)`.
pub fn participant_fraction(model: &SpreadModel, r: f64, d0: f64, risk_free_outside: f64) -> f64 {
    model.mass_above(case1_threshold(r, d0, risk_free_outside))
}

/// Case-1 opportunity predicate: requires a negative current spread and the
/// modeled probability of clearing the threshold to reach `confidence`.
pub fn case1_opportunity(
    model: &SpreadModel,
    d0: f64,
    r: f64,
    risk_free_outside: f64,
    confidence: f64,
) -> Result<(f64, bool)> {
    if d0 >= 0.0 {
        return Err(Error::WrongRegime(format!("case 1 needs d0 < 0, got {d0}")));
    }
    let q = case1_threshold(r, d0, risk_free_outside);
    Ok((q, model.mass_above(q) >= confidence))
}

/// Required swap-rate magnitude for a case-2 opportunity at realized `dt`:
/// `|r| > dt - d0 / (1 + R_E) + R_E / (1 + R_E)`.
pub fn case2_threshold(d0: f64, dt: f64, risk_free_base: f64) -> f64 {
    dt - d0 / (1.0 + risk_free_base) + risk_free_base / (1.0 + risk_free_base)
}

/// Case-2 opportunity predicate: positive current spread, and the modeled
/// probability that `dt` stays under `|r| + d0/(1+R_E) - R_E/(1+R_E)`
/// reaches `confidence`.
pub fn case2_opportunity(
    model: &SpreadModel,
    d0: f64,
    r: f64,
    risk_free_base: f64,
    confidence: f64,
) -> Result<(f64, bool)> {
    if d0 <= 0.0 {
        return Err(Error::WrongRegime(format!("case 2 needs d0 > 0, got {d0}")));
    }
    let q = r.abs() + d0 / (1.0 + risk_free_base) - risk_free_base / (1.0 + risk_free_base);
    Ok((q, model.mass_below(q) >= confidence))
}

/// Opening legs of the case-1 trade for `qty` base units: sell
/// `qty * b0 / a0` outside currency, move the proceeds, take a fully backed
/// long.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case1Plan {
    /// Outside currency sold at the real venue.
    pub sell_usd: Amount,
    /// Quote proceeds transferred to the virtual venue.
    pub transfer_quote: Amount,
    pub long_qty: Amount,
    pub long_limit: Price,
    /// Margin for the fully backed long: qty * b0.
    pub long_margin: Amount,
}

/// Builds the case-1 opening plan. `usd_balance` is the trader's outside
/// currency at the real venue.
pub fn execute_case1(
    usd_balance: Amount,
    qty: Amount,
    real_price: Price,
    virtual_price: Price,
) -> Result<Case1Plan> {
    let quote_needed = qty.mul_down(virtual_price);
    let sell_usd = quote_needed.div_down(real_price);
    if usd_balance < sell_usd {
        return Err(Error::InsufficientCapital(format!(
            "case 1 needs {sell_usd} outside currency, has {usd_balance}"
        )));
    }
    Ok(Case1Plan {
        sell_usd,
        transfer_quote: quote_needed,
        long_qty: qty,
        long_limit: virtual_price,
        long_margin: quote_needed,
    })
}

/// Case-1 unwind flows for `qty` at future prices, given the realized
/// per-period swap income already converted to quote units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case1Unwind {
    /// Quote earned from the swap: qty * a_t * r.
    pub swap_quote: Amount,
    /// Quote earned by closing the long: qty * b_t.
    pub close_quote: Amount,
    /// Outside currency obtained after selling all quote proceeds.
    pub usd_inflow: Amount,
}

pub fn case1_unwind(
    qty: Amount,
    real_price: Price,
    virtual_price: Price,
    rate: Fixed,
) -> Case1Unwind {
    let swap_quote = qty.mul_down(real_price).mul_down(rate);
    let close_quote = qty.mul_down(virtual_price);
    Case1Unwind {
        swap_quote,
        close_quote,
        usd_inflow: (swap_quote + close_quote).div_down(real_price),
    }
}

/// Opening legs of the case-2 trade for `qty` base units: sell
/// `qty * b0 / (1 + R_E)` base-token quote outside, short on the virtual
/// venue with enough margin to avoid liquidation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case2Plan {
    /// Quote sold at the real venue.
    pub sell_quote: Amount,
    /// Outside currency obtained: qty * b0 / (a0 (1 + R_E)).
    pub usd_obtained: Amount,
    pub short_qty: Amount,
    pub short_limit: Price,
    /// Margin for the short, a configurable multiple of notional.
    pub short_margin: Amount,
}

pub fn execute_case2(
    quote_at_real: Amount,
    stake_margin_free: Amount,
    qty: Amount,
    real_price: Price,
    virtual_price: Price,
    risk_free_base: Fixed,
    margin_multiple: Fixed,
) -> Result<Case2Plan> {
    let gross = qty.mul_down(virtual_price);
    let sell_quote = gross.div_down(Fixed::ONE + risk_free_base);
    if quote_at_real < sell_quote {
        return Err(Error::InsufficientCapital(format!(
            "case 2 needs {sell_quote} quote at the real venue, has {quote_at_real}"
        )));
    }
    let short_margin = gross.mul_down(margin_multiple);
    if stake_margin_free < short_margin {
        return Err(Error::InsufficientCapital(format!(
            "case 2 needs {short_margin} margin, has {stake_margin_free}"
        )));
    }
    Ok(Case2Plan {
        sell_quote,
        usd_obtained: sell_quote.div_down(real_price),
        short_qty: qty,
        short_limit: virtual_price,
        short_margin,
    })
}

/// Case-2 unwind flows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Case2Unwind {
    /// Quote obtained by selling the outside currency back: usd * a_t.
    pub resell_quote: Amount,
    /// Quote earned from the swap: qty * a_t * |r|.
    pub swap_quote: Amount,
    /// Realized short profit in quote units: qty * (b0 - b_t).
    pub close_quote: Amount,
}

pub fn case2_unwind(
    qty: Amount,
    usd_held: Amount,
    entry_virtual: Price,
    real_price: Price,
    virtual_price: Price,
    rate: Fixed,
) -> Case2Unwind {
    Case2Unwind {
        resell_quote: usd_held.mul_down(real_price),
        swap_quote: qty.mul_down(real_price).mul_down(rate.abs()),
        close_quote: qty.mul_down(entry_virtual) - qty.mul_down(virtual_price),
    }
}

/// Market-maker quoting parameters.
#[derive(Debug, Clone, Serialize)]
pub struct MmParams {
    /// Absolute half-spread in quote units around the index.
    pub half_spread: Price,
    /// Price gap between successive ladder levels.
    pub level_gap: Price,
    /// Number of levels per side.
    pub levels: u32,
    /// Base quantity per level.
    pub level_qty: Amount,
    /// Net inventory bound; the growing side is suppressed at the cap.
    pub inventory_cap: Amount,
}

/// One quote the market maker wants resting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quote {
    pub is_bid: bool,
    pub price: Price,
    pub qty: Amount,
}

/// Symmetric ladder around the index, sides suppressed at the inventory cap.
/// `inventory` is the signed net base position (long positive). A stale
/// index yields no quotes.
pub fn mm_quote(
    index: Option<Price>,
    inventory: Amount,
    params: &MmParams,
    tick: Price,
) -> Vec<Quote> {
    let Some(index) = index else {
        return Vec::new();
    };
    let mut quotes = Vec::new();
    let bid_ok = inventory < params.inventory_cap;
    let ask_ok = inventory > -params.inventory_cap;
    for level in 0..params.levels {
        let offset = params.half_spread + params.level_gap.mul_int(level as i64);
        if bid_ok {
            let price = (index - offset).floor_to(tick);
            if price.is_positive() {
                quotes.push(Quote {
                    is_bid: true,
                    price,
                    qty: params.level_qty,
                });
            }
        }
        if ask_ok {
            quotes.push(Quote {
                is_bid: false,
                price: (index + offset).floor_to(tick),
                qty: params.level_qty,
            });
        }
    }
    quotes
}
