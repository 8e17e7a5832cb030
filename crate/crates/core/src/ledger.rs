//! Single source of truth for asset balances.
//!
//! Every protocol action that touches money goes through this ledger, and the
//! conservation identity is checked against it: per asset, the sum of all
//! free and locked balances equals initial supply plus mints minus burns,
//! exactly. Balances never go negative.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::Amount;

/// Index of a registered account. System accounts are registered first and
/// have well-known indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AccountId(pub u32);

/// Index of a registered asset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct AssetId(pub u16);

/// Free/locked split of one account's holdings of one asset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Balance {
    pub free: Amount,
    pub locked: Amount,
}

impl Balance {
    pub fn total(&self) -> Amount {
        self.free + self.locked
    }
}

/// Which sub-balance a movement touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sub {
    Free,
    Locked,
}

/// One balance mutation, journaled for the event log.
#[derive(Debug, Clone, Serialize)]
pub struct BalanceChange {
    pub account: String,
    pub asset: String,
    pub delta: Amount,
    pub reason: &'static str,
}

struct AssetInfo {
    symbol: String,
    /// Account allowed to mint/burn this asset, if any.
    minter: Option<AccountId>,
    initial: Amount,
    minted: Amount,
    burned: Amount,
}

/// Balances plus mint/burn totals for every registered asset and account.
pub struct Ledger {
    assets: Vec<AssetInfo>,
    asset_by_symbol: BTreeMap<String, AssetId>,
    accounts: Vec<String>,
    account_by_name: BTreeMap<String, AccountId>,
    /// Dense matrix: balances[account][asset].
    balances: Vec<Vec<Balance>>,
    journal: Vec<BalanceChange>,
}

/// Immutable snapshot used by metrics and the verifier.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerSnapshot {
    pub balances: BTreeMap<(String, String), Balance>,
    pub initial: BTreeMap<String, Amount>,
    pub minted_total: BTreeMap<String, Amount>,
    pub burned_total: BTreeMap<String, Amount>,
}

impl Default for Ledger {
    fn default() -> Self {
        Self::new()
    }
}

impl Ledger {
    pub fn new() -> Ledger {
        Ledger {
            assets: Vec::new(),
            asset_by_symbol: BTreeMap::new(),
            accounts: Vec::new(),
            account_by_name: BTreeMap::new(),
            balances: Vec::new(),
            journal: Vec::new(),
        }
    }

    /// Registers an asset with an optional mint/burn authority.
    pub fn register_asset(&mut self, symbol: &str, minter: Option<AccountId>) -> Result<AssetId> {
        if symbol.is_empty() {
            return Err(Error::ConfigInvalid(
                "asset symbol must be non-empty".into(),
            ));
        }
        if self.asset_by_symbol.contains_key(symbol) {
            return Err(Error::ConfigInvalid(format!("duplicate asset {symbol}")));
        }
        let id = AssetId(self.assets.len() as u16);
        self.assets.push(AssetInfo {
            symbol: symbol.to_string(),
            minter,
            initial: Amount::ZERO,
            minted: Amount::ZERO,
            burned: Amount::ZERO,
        });
        self.asset_by_symbol.insert(symbol.to_string(), id);
        for row in &mut self.balances {
            row.push(Balance::default());
        }
        Ok(id)
    }

    pub fn register_account(&mut self, name: &str) -> Result<AccountId> {
        if self.account_by_name.contains_key(name) {
            return Err(Error::ConfigInvalid(format!("duplicate account {name}")));
        }
        let id = AccountId(self.accounts.len() as u32);
        self.accounts.push(name.to_string());
        self.account_by_name.insert(name.to_string(), id);
        self.balances
            .push(vec![Balance::default(); self.assets.len()]);
        Ok(id)
    }

    pub fn account_id(&self, name: &str) -> Option<AccountId> {
        self.account_by_name.get(name).copied()
    }

    pub fn account_name(&self, id: AccountId) -> &str {
        &self.accounts[id.0 as usize]
    }

    pub fn asset_id(&self, symbol: &str) -> Option<AssetId> {
        self.asset_by_symbol.get(symbol).copied()
    }

    pub fn asset_symbol(&self, id: AssetId) -> &str {
        &self.assets[id.0 as usize].symbol
    }

    pub fn accounts(&self) -> impl Iterator<Item = AccountId> + '_ {
        (0..self.accounts.len() as u32).map(AccountId)
    }

    pub fn balance(&self, account: AccountId, asset: AssetId) -> Balance {
        self.balances[account.0 as usize][asset.0 as usize]
    }

    pub fn free(&self, account: AccountId, asset: AssetId) -> Amount {
        self.balance(account, asset).free
    }

    pub fn locked(&self, account: AccountId, asset: AssetId) -> Amount {
        self.balance(account, asset).locked
    }

    /// Genesis endowment; counts toward the asset's initial supply.
    pub fn endow(&mut self, account: AccountId, asset: AssetId, amt: Amount) -> Result<()> {
        if amt.is_negative() {
            return Err(Error::ConfigInvalid("negative endowment".into()));
        }
        self.assets[asset.0 as usize].initial += amt;
        self.credit(account, asset, Sub::Free, amt, "endow");
        Ok(())
    }

    /// Moves `amt` between free balances of two accounts.
    pub fn transfer(
        &mut self,
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        amt: Amount,
        reason: &'static str,
    ) -> Result<()> {
        self.move_sub(from, Sub::Free, to, Sub::Free, asset, amt, reason)
    }

    /// Moves `amt` from one account's locked balance to another's free.
    pub fn transfer_locked_to_free(
        &mut self,
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        amt: Amount,
        reason: &'static str,
    ) -> Result<()> {
        self.move_sub(from, Sub::Locked, to, Sub::Free, asset, amt, reason)
    }

    /// Moves `amt` between locked balances of two accounts.
    pub fn transfer_locked(
        &mut self,
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        amt: Amount,
        reason: &'static str,
    ) -> Result<()> {
        self.move_sub(from, Sub::Locked, to, Sub::Locked, asset, amt, reason)
    }

    /// Moves `amt` from one account's free balance into another's locked.
    pub fn transfer_free_to_locked(
        &mut self,
        from: AccountId,
        to: AccountId,
        asset: AssetId,
        amt: Amount,
        reason: &'static str,
    ) -> Result<()> {
        self.move_sub(from, Sub::Free, to, Sub::Locked, asset, amt, reason)
    }

    /// Moves `amt` of an account's own funds from free to locked.
    pub fn lock(&mut self, account: AccountId, asset: AssetId, amt: Amount) -> Result<()> {
        self.move_sub(account, Sub::Free, account, Sub::Locked, asset, amt, "lock")
    }

    /// Moves `amt` of an account's own funds from locked back to free.
    pub fn unlock(&mut self, account: AccountId, asset: AssetId, amt: Amount) -> Result<()> {
        self.move_sub(
            account,
            Sub::Locked,
            account,
            Sub::Free,
            asset,
            amt,
            "unlock",
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn move_sub(
        &mut self,
        from: AccountId,
        from_sub: Sub,
        to: AccountId,
        to_sub: Sub,
        asset: AssetId,
        amt: Amount,
        reason: &'static str,
    ) -> Result<()> {
        if amt.is_zero() {
            return Ok(());
        }
        if amt.is_negative() {
            return Err(Error::InsufficientFunds(format!(
                "negative amount {amt} in {reason}"
            )));
        }
        self.check_ids(from, asset)?;
        self.check_ids(to, asset)?;
        let have = match from_sub {
            Sub::Free => self.balance(from, asset).free,
            Sub::Locked => self.balance(from, asset).locked,
        };
        if have < amt {
            return Err(Error::InsufficientFunds(format!(
                "{} has {} {} ({:?}), needs {}",
                self.account_name(from),
                have,
                self.asset_symbol(asset),
                from_sub,
                amt
            )));
        }
        self.debit(from, asset, from_sub, amt, reason);
        self.credit(to, asset, to_sub, amt, reason);
        Ok(())
    }

    /// Creates new supply. Only the asset's registered minter may call.
    pub fn mint(
        &mut self,
        caller: AccountId,
        asset: AssetId,
        to: AccountId,
        amt: Amount,
    ) -> Result<()> {
        self.check_ids(to, asset)?;
        if self.assets[asset.0 as usize].minter != Some(caller) {
            return Err(Error::UnauthorizedMinter(
                self.asset_symbol(asset).to_string(),
            ));
        }
        if amt.is_negative() {
            return Err(Error::ConfigInvalid("negative mint".into()));
        }
        self.assets[asset.0 as usize].minted += amt;
        self.credit(to, asset, Sub::Free, amt, "mint");
        Ok(())
    }

    /// Destroys supply from `from`'s free balance. Only the minter may call.
    pub fn burn(
        &mut self,
        caller: AccountId,
        asset: AssetId,
        from: AccountId,
        amt: Amount,
    ) -> Result<()> {
        self.check_ids(from, asset)?;
        if self.assets[asset.0 as usize].minter != Some(caller) {
            return Err(Error::UnauthorizedMinter(
                self.asset_symbol(asset).to_string(),
            ));
        }
        if self.balance(from, asset).free < amt {
            return Err(Error::InsufficientFunds(format!(
                "burn {} {} from {}",
                amt,
                self.asset_symbol(asset),
                self.account_name(from)
            )));
        }
        self.assets[asset.0 as usize].burned += amt;
        self.debit(from, asset, Sub::Free, amt, "burn");
        Ok(())
    }

    fn check_ids(&self, account: AccountId, asset: AssetId) -> Result<()> {
        if account.0 as usize >= self.accounts.len() {
            return Err(Error::UnknownAccount(format!("#{}", account.0)));
        }
        if asset.0 as usize >= self.assets.len() {
            return Err(Error::UnknownAccount(format!("asset #{}", asset.0)));
        }
        Ok(())
    }

    fn credit(
        &mut self,
        account: AccountId,
        asset: AssetId,
        sub: Sub,
        amt: Amount,
        reason: &'static str,
    ) {
        let b = &mut self.balances[account.0 as usize][asset.0 as usize];
        match sub {
            Sub::Free => b.free += amt,
            Sub::Locked => b.locked += amt,
        }
        if !amt.is_zero() {
            self.journal.push(BalanceChange {
                account: self.accounts[account.0 as usize].clone(),
                asset: self.assets[asset.0 as usize].symbol.clone(),
                delta: amt,
                reason,
            });
        }
    }

    fn debit(
        &mut self,
        account: AccountId,
        asset: AssetId,
        sub: Sub,
        amt: Amount,
        reason: &'static str,
    ) {
        let b = &mut self.balances[account.0 as usize][asset.0 as usize];
        match sub {
            Sub::Free => {
                debug_assert!(b.free >= amt);
                b.free -= amt;
            }
            Sub::Locked => {
                debug_assert!(b.locked >= amt);
                b.locked -= amt;
            }
        }
        if !amt.is_zero() {
            self.journal.push(BalanceChange {
                account: self.accounts[account.0 as usize].clone(),
                asset: self.assets[asset.0 as usize].symbol.clone(),
                delta: -amt,
                reason,
            });
        }
    }

    /// Drains journaled mutations since the last call.
    pub fn drain_journal(&mut self) -> Vec<BalanceChange> {
        std::mem::take(&mut self.journal)
    }

    /// Checks the conservation identity for every asset, exactly.
    pub fn check_conservation(&self) -> Result<()> {
        for (i, info) in self.assets.iter().enumerate() {
            let total: Amount = self.balances.iter().map(|row| row[i].total()).sum();
            let expected = info.initial + info.minted - info.burned;
            if total != expected {
                return Err(Error::InvariantViolation(format!(
                    "conservation broken for {}: held {} vs initial {} + minted {} - burned {}",
                    info.symbol, total, info.initial, info.minted, info.burned
                )));
            }
            for (a, row) in self.balances.iter().enumerate() {
                if row[i].free.is_negative() || row[i].locked.is_negative() {
                    return Err(Error::InvariantViolation(format!(
                        "negative balance of {} for {}",
                        info.symbol, self.accounts[a]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn minted_total(&self, asset: AssetId) -> Amount {
        self.assets[asset.0 as usize].minted
    }

    pub fn burned_total(&self, asset: AssetId) -> Amount {
        self.assets[asset.0 as usize].burned
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        let mut balances = BTreeMap::new();
        for (a, row) in self.balances.iter().enumerate() {
            for (i, b) in row.iter().enumerate() {
                if !b.free.is_zero() || !b.locked.is_zero() {
                    balances.insert(
                        (self.accounts[a].clone(), self.assets[i].symbol.clone()),
                        *b,
                    );
                }
            }
        }
        LedgerSnapshot {
            balances,
            initial: self
                .assets
                .iter()
                .map(|x| (x.symbol.clone(), x.initial))
                .collect(),
            minted_total: self
                .assets
                .iter()
                .map(|x| (x.symbol.clone(), x.minted))
                .collect(),
            burned_total: self
                .assets
                .iter()
                .map(|x| (x.symbol.clone(), x.burned))
                .collect(),
        }
    }
}
