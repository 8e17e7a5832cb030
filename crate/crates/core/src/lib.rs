//! Deterministic simulator for a margin-exchange stablecoin protocol.
//!
//! The protocol keeps a pegged token (e.g. USDE) at par with a real-world
//! asset by backing it one-for-one with fully collateralized long positions
//! on a virtual derivatives exchange, and steering the perpetual swap rate so
//! that statistical arbitrageurs profit from closing any price gap between
//! the virtual venue and the outside market.
//!
//! Crate layout mirrors the protocol components:
//!
//! - [`fixed`]: 18-digit fixed-point money math
//! - [`ledger`]: balances, conservation, mint/burn authority
//! - [`exchange`]: per-pair order books with uniform-price batch auctions
//!   and pro-rata fills
//! - [`margin`]: positions, equity, margin calls and liquidation
//! - [`swap`]: deviation measurement and the swap-rate controller
//! - [`oracle`]: index computation and the reporter sampling/reward/slash
//!   round
//! - [`bank`]: staking, the long-term rate and interest payment
//! - [`currency`]: pegged-token issuance and redemption
//! - [`agents`]: market-maker quoting and the cross-venue arbitrage
//!   strategies with their profitability conditions
//! - [`sim`]: scenario configuration, the step scheduler, metrics and the
//!   replay verifier

pub mod agents;
pub mod bank;
pub mod currency;
pub mod error;
pub mod exchange;
pub mod fixed;
pub mod ledger;
pub mod margin;
pub mod oracle;
pub mod sim;
pub mod swap;

pub use error::{Error, Result};
pub use fixed::{Amount, Fixed, Price};
pub use ledger::{AccountId, AssetId, Balance, Ledger};
