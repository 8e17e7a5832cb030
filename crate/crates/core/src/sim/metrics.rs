//! Per-step metrics, the run summary, and the peg-restoration measure.

use serde::{Deserialize, Serialize};

use crate::fixed::{Amount, Fixed, Price};

/// One row of metrics.csv.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsFrame {
    pub step: u64,
    /// Outside (real) index price.
    pub real_index: Price,
    /// Virtual venue mark.
    pub virtual_mark: Price,
    /// Relative spread (virtual_mark - real_index) / real_index.
    pub spread: Fixed,
    pub swap_rate: Fixed,
    /// Long open interest in base units.
    pub open_interest: Amount,
    /// Aggregate miner wealth change since genesis, quote units.
    pub miner_pnl: Amount,
    pub reserve_balance: Amount,
    pub outstanding_pegged: Amount,
    pub solvency_headroom: Amount,
}

pub const METRICS_HEADER: &str = "step,real_index,virtual_mark,spread,swap_rate,open_interest,miner_pnl,reserve_balance,outstanding_pegged,solvency_headroom";

impl MetricsFrame {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.step,
            self.real_index,
            self.virtual_mark,
            self.spread,
            self.swap_rate,
            self.open_interest,
            self.miner_pnl,
            self.reserve_balance,
            self.outstanding_pegged,
            self.solvency_headroom,
        )
    }
}

pub fn frames_to_csv(frames: &[MetricsFrame]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for frame in frames {
        out.push_str(&frame.csv_row());
        out.push('\n');
    }
    out
}

/// First step at or after `shock_step` from which |spread| stays below
/// `epsilon` for `persistence` consecutive recorded steps. `None` if the
/// series never sustains the band.
pub fn restoration_time(
    spreads: &[(u64, Fixed)],
    shock_step: u64,
    epsilon: Fixed,
    persistence: u64,
) -> Option<u64> {
    assert!(epsilon.is_positive() && persistence >= 1);
    let needed = persistence as usize;
    let start = spreads.iter().position(|(step, _)| *step >= shock_step)?;
    let series = &spreads[start..];
    let mut run = 0usize;
    for (i, (_, d)) in series.iter().enumerate() {
        if d.abs() < epsilon {
            run += 1;
            if run == needed {
                return Some(series[i + 1 - needed].0);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// One liquidation for the summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiquidationSummary {
    pub step: u64,
    pub owner: String,
    pub side: String,
    pub qty: Amount,
    pub bankruptcy_price: Price,
    pub trigger_index: Price,
    pub fill_price: Price,
    pub shortfall: Amount,
}

/// summary.json contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub steps: u64,
    pub shock_step: u64,
    pub restoration_step: Option<u64>,
    pub max_abs_spread: Fixed,
    pub liquidation_count: u64,
    pub liquidations: Vec<LiquidationSummary>,
    pub minted_base: Amount,
    pub solvency_ok: bool,
    pub outstanding_pegged: Amount,
    pub trade_count: u64,
    pub invariant_violations: u64,
}
