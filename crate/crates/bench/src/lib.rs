//! Shared fixtures for the engine benchmarks.

use peg_core::exchange::{OrderReq, OrderTag, PairId, Side};
use peg_core::fixed::Fixed;
use peg_core::ledger::AccountId;
use peg_core::sim::config::ScenarioConfig;
use peg_core::sim::World;

/// A bare world: one pair at 100, zero fees, no agents.
pub fn bare_world(steps: u64) -> World {
    let json = format!(
        r#"{{
        "seed": 1,
        "steps": {steps},
        "pair": {{"name": "USD/EXM", "base": "USD", "quote": "EXM",
                  "taker_fee": "0", "maker_rebate": "0", "max_leverage": "4"}},
        "real_venue": {{"process": {{"type": "ramp", "points": [[0, 100.0]]}}}}
    }}"#
    );
    World::new(ScenarioConfig::from_json(&json).unwrap(), None).unwrap()
}

/// Registers a funded trader.
pub fn trader(world: &mut World, name: &str) -> AccountId {
    let id = world.ledger.register_account(name).unwrap();
    let quote = world.quote_asset;
    world
        .ledger
        .endow(id, quote, Fixed::from_int(1_000_000_000))
        .unwrap();
    id
}

pub fn limit_order(owner: AccountId, side: Side, price: Fixed, qty: Fixed) -> OrderReq {
    OrderReq {
        owner,
        pair: PairId(0),
        side,
        price,
        qty,
        leverage: Fixed::from_int(2),
        reduce_only: false,
        tag: OrderTag::Agent,
    }
}

/// The peg-break scenario used by the step-throughput benchmark.
pub fn pegbreak_config() -> ScenarioConfig {
    let path = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios/pegbreak_neg10.json");
    ScenarioConfig::from_file(&path).unwrap()
}
