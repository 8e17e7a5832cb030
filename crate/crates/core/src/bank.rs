//! Staking, the long-term base-token rate and interest payment.
//!
//! Deposits staked with a lock period earn a per-period rate derived from
//! the swap-rate history: at least the average per-period cost that long
//! positions paid through negative swap rates, plus a safety margin. That
//! keeps the currency service's interest income ahead of its swap losses in
//! the long run, which the solvency monitor tracks. Interest is paid from
//! the operations pool (fee sink) first and minted only for the shortfall.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::Result;
use crate::fixed::{Amount, Fixed};
use crate::ledger::{AccountId, AssetId, Ledger};

/// A locked staking deposit.
#[derive(Debug, Clone, Serialize)]
pub struct Stake {
    pub owner: AccountId,
    pub amount: Amount,
    /// Step until which the deposit stays locked; no early exit.
    pub lock_until: u64,
    /// Interest paid out so far.
    pub accrued: Amount,
}

/// Rate policy knobs.
#[derive(Debug, Clone, Serialize)]
pub struct RatePolicy {
    /// Periods of swap-rate history entering the average.
    pub horizon: usize,
    /// Safety spread added on top of the covered swap cost, per period.
    pub margin: Fixed,
    /// Periods in the solvency trailing window.
    pub solvency_horizon: usize,
}

impl Default for RatePolicy {
    fn default() -> Self {
        RatePolicy {
            horizon: 100,
            margin: "0.001".parse().unwrap(),
            solvency_horizon: 100,
        }
    }
}

/// Per-period interest payment report.
#[derive(Debug, Clone, Serialize)]
pub struct InterestReport {
    pub rate: Fixed,
    pub total: Amount,
    pub pool_used: Amount,
    pub minted: Amount,
}

/// Solvency status of the currency service.
#[derive(Debug, Clone, Serialize)]
pub struct SolvencyReport {
    /// Trailing-window interest received minus swap losses.
    pub headroom: Amount,
    pub ok: bool,
}

/// The central bank: stakes, rate state and the solvency monitor.
pub struct CentralBank {
    pub account: AccountId,
    pub asset: AssetId,
    pub policy: RatePolicy,
    pub rate: Fixed,
    stakes: Vec<Stake>,
    rate_history: VecDeque<Fixed>,
    /// Per-period (interest - swap loss) records for the monitored service.
    solvency_window: VecDeque<Amount>,
    period_interest: Amount,
    period_swap_loss: Amount,
}

impl CentralBank {
    pub fn new(account: AccountId, asset: AssetId, policy: RatePolicy) -> CentralBank {
        CentralBank {
            account,
            asset,
            policy,
            rate: Fixed::ZERO,
            stakes: Vec::new(),
            rate_history: VecDeque::new(),
            solvency_window: VecDeque::new(),
            period_interest: Amount::ZERO,
            period_swap_loss: Amount::ZERO,
        }
    }

    /// Locks `amount` of the owner's free balance for `lock_periods` steps.
    pub fn stake(
        &mut self,
        ledger: &mut Ledger,
        owner: AccountId,
        amount: Amount,
        now: u64,
        lock_steps: u64,
    ) -> Result<()> {
        ledger.lock(owner, self.asset, amount)?;
        self.stakes.push(Stake {
            owner,
            amount,
            lock_until: now + lock_steps,
            accrued: Amount::ZERO,
        });
        Ok(())
    }

    /// Releases expired stakes back to free balances.
    pub fn release_expired(&mut self, ledger: &mut Ledger, now: u64) -> Result<()> {
        let mut keep = Vec::with_capacity(self.stakes.len());
        for stake in self.stakes.drain(..) {
            if stake.lock_until <= now {
                ledger.unlock(stake.owner, self.asset, stake.amount)?;
            } else {
                keep.push(stake);
            }
        }
        self.stakes = keep;
        Ok(())
    }

    pub fn stakes(&self) -> &[Stake] {
        &self.stakes
    }

    /// Total staked (still locked) deposit of one account.
    pub fn staked_of(&self, owner: AccountId) -> Amount {
        self.stakes
            .iter()
            .filter(|s| s.owner == owner)
            .map(|s| s.amount)
            .sum()
    }

    /// Reduces a staked deposit (oracle slashing); returns what was taken.
    pub fn slash_stake(&mut self, owner: AccountId, amount: Amount) -> Amount {
        let mut left = amount;
        for stake in self.stakes.iter_mut().filter(|s| s.owner == owner) {
            let cut = stake.amount.min(left);
            stake.amount -= cut;
            left -= cut;
            if left.is_zero() {
                break;
            }
        }
        self.stakes.retain(|s| s.amount.is_positive());
        amount - left
    }

    /// Records the swap rate of one period into the history.
    pub fn record_swap_rate(&mut self, rate: Fixed) {
        self.rate_history.push_back(rate);
        while self.rate_history.len() > self.policy.horizon {
            self.rate_history.pop_front();
        }
    }

    /// Long-term rate rule: average per-period cost longs paid through
    /// negative swap rates over the horizon, plus the safety margin.
    pub fn set_rate(&mut self) -> Fixed {
        self.rate = set_rate(self.rate_history.make_contiguous(), self.policy.margin);
        self.rate
    }

    /// Pays one period of interest on locked stakes plus the margin-linked
    /// amounts (live locked balances treated as stakes, e.g. the currency
    /// service's position margin). Pool first, minted remainder.
    pub fn accrue_and_pay(
        &mut self,
        ledger: &mut Ledger,
        ops_pool: AccountId,
        now: u64,
        margin_linked: &[(AccountId, Amount)],
    ) -> Result<InterestReport> {
        let rate = self.rate;
        let mut total = Amount::ZERO;
        let mut pool_used = Amount::ZERO;
        let mut minted = Amount::ZERO;
        let mut payments: Vec<(AccountId, Amount, Option<usize>)> = Vec::new();
        for (i, stake) in self.stakes.iter().enumerate() {
            if stake.lock_until > now {
                let interest = stake.amount.mul_down(rate);
                if interest.is_positive() {
                    payments.push((stake.owner, interest, Some(i)));
                }
            }
        }
        for &(owner, amount) in margin_linked {
            let interest = amount.mul_down(rate);
            if interest.is_positive() {
                payments.push((owner, interest, None));
            }
        }
        for (owner, interest, stake_idx) in payments {
            let from_pool = interest.min(ledger.free(ops_pool, self.asset));
            ledger.transfer(ops_pool, owner, self.asset, from_pool, "interest")?;
            let shortfall = interest - from_pool;
            if shortfall.is_positive() {
                ledger.mint(self.account, self.asset, owner, shortfall)?;
            }
            pool_used += from_pool;
            minted += shortfall;
            total += interest;
            if let Some(i) = stake_idx {
                self.stakes[i].accrued += interest;
            }
        }
        Ok(InterestReport {
            rate,
            total,
            pool_used,
            minted,
        })
    }

    /// Records the monitored service's flows for the current period.
    pub fn record_service_interest(&mut self, amount: Amount) {
        self.period_interest += amount;
    }

    /// Positive `loss` means the service paid that much through swaps this
    /// period; negative means it received funding.
    pub fn record_service_swap_loss(&mut self, loss: Amount) {
        self.period_swap_loss += loss;
    }

    /// Closes the period for the solvency monitor and reports the trailing
    /// headroom.
    pub fn solvency_check(&mut self) -> SolvencyReport {
        let net = self.period_interest - self.period_swap_loss;
        self.period_interest = Amount::ZERO;
        self.period_swap_loss = Amount::ZERO;
        self.solvency_window.push_back(net);
        while self.solvency_window.len() > self.policy.solvency_horizon {
            self.solvency_window.pop_front();
        }
        let headroom: Amount = self.solvency_window.iter().copied().sum();
        SolvencyReport {
            headroom,
            ok: !headroom.is_negative(),
        }
    }
}

/// Pure rate rule, exposed for tests: `max(0, mean(max(0, -r))) + margin`.
pub fn set_rate(history: &[Fixed], margin: Fixed) -> Fixed {
    if history.is_empty() {
        return margin;
    }
    let cost: Fixed = history.iter().map(|r| (-*r).max(Fixed::ZERO)).sum();
    cost.div_down(Fixed::from_int(history.len() as i64)) + margin
}
