//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the checked bound (run with `--nocapture` to see them).

use std::collections::BTreeMap;
use std::path::PathBuf;

use peg_core::agents::{participant_fraction, SpreadModel};
use peg_core::exchange::{OrderReq, OrderTag, Side};
use peg_core::fixed::{Amount, Fixed, Price};
use peg_core::ledger::AccountId;
use peg_core::margin::{MarginParams, PosSide, PositionStore, SettleAccounts};
use peg_core::sim::config::ScenarioConfig;
use peg_core::sim::runner::{run, run_in_memory};
use peg_core::sim::verify::verify;
use peg_core::sim::World;
use peg_core::Ledger;
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;

fn fx(s: &str) -> Fixed {
    s.parse().unwrap()
}

fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn load_scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_file(&scenario_path(name)).expect("golden scenario parses")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("peg-accept-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

/// Criterion 1: the worked leverage/liquidation arithmetic. A 1x short
/// (margin 100, entry 100) is margin-called exactly when the index first
/// reaches 200; a 2x short (margin 50) exactly at 150; equality at the
/// boundary triggers. Runs in under a second.
#[test]
fn acceptance_1_liquidation_thresholds_exact() {
    let started = std::time::Instant::now();
    let config = load_scenario("leverage_s61.json");
    let output = run_in_memory(&config, None).unwrap();

    // Margin-call events carry the exact trigger index.
    let mut calls: BTreeMap<String, (Price, Price, u64)> = BTreeMap::new();
    for event in output_events(&output.events_jsonl) {
        if let Some(("margin_call", v)) = typed(&event) {
            calls.insert(
                v["owner"].as_str().unwrap().to_string(),
                (
                    v["trigger_index"].as_str().unwrap().parse().unwrap(),
                    v["bankruptcy_price"].as_str().unwrap().parse().unwrap(),
                    v["step"].as_u64().unwrap(),
                ),
            );
        }
    }
    let (trigger_2x, bankruptcy_2x, step_2x) = calls["short-2x"];
    let (trigger_1x, bankruptcy_1x, step_1x) = calls["short-1x"];
    assert_eq!(
        trigger_2x,
        fx("150"),
        "2x short must trigger at exactly 150"
    );
    assert_eq!(bankruptcy_2x, fx("150"));
    assert_eq!(
        trigger_1x,
        fx("200"),
        "1x short must trigger at exactly 200"
    );
    assert_eq!(bankruptcy_1x, fx("200"));

    // The ramp rises one unit per step from step 5: the index first touches
    // 150 at step 55 and 200 at step 105; the boundary itself triggers.
    assert_eq!(step_2x, 55);
    assert_eq!(step_1x, 105);

    // Both positions fully closed by liquidation fills.
    let closed_2x: Amount = output
        .summary
        .liquidations
        .iter()
        .filter(|l| l.owner == "short-2x")
        .map(|l| l.qty)
        .sum();
    let closed_1x: Amount = output
        .summary
        .liquidations
        .iter()
        .filter(|l| l.owner == "short-1x")
        .map(|l| l.qty)
        .sum();
    assert_eq!(closed_2x, fx("1"));
    assert_eq!(closed_1x, fx("1"));

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "must finish in under 1s, took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 1 PASS - leverage arithmetic exact: 2x short called at 150 (step 55), 1x at 200 (step 105), in {elapsed:?}"
    );
}

/// Criterion 2: fully backed longs can never be liquidated. Over 1000
/// seeded price paths (including decay to 1e-12), the margin-call processor
/// never flags them and equity equals qty*price to the fixed-point ulp.
#[test]
fn acceptance_2_fully_backed_long_safety() {
    let started = std::time::Instant::now();
    let mut paths_checked = 0u32;
    for seed in 0..1000u64 {
        let mut rng = Pcg64::seed_from_u64(seed);
        let mut ledger = Ledger::new();
        let pool = ledger.register_account("clearing-pool").unwrap();
        let reserve = ledger.register_account("reserve").unwrap();
        let exm = ledger.register_asset("EXM", None).unwrap();
        let service = ledger.register_account("service").unwrap();
        ledger.endow(pool, exm, fx("1000000000")).unwrap();
        ledger.endow(reserve, exm, fx("1000000000")).unwrap();
        ledger.endow(service, exm, fx("100000000")).unwrap();
        let accounts = SettleAccounts {
            clearing_pool: pool,
            reserve,
            quote: exm,
        };
        let params = MarginParams::default();
        let mut store = PositionStore::new();

        // A fully backed long exactly as issuance constructs it: margin
        // equals entry notional.
        let lot = fx("0.000001");
        let qty = Fixed::from_raw(rng.random_range(1..=5_000_000i128) * lot.raw());
        let tick = fx("0.01");
        let entry = tick.mul_int(rng.random_range(100..=20_000i64));
        let margin = qty.mul_down(entry);
        store
            .open_or_update(
                &mut ledger,
                accounts,
                &params,
                service,
                peg_core::exchange::PairId(0),
                PosSide::Long,
                qty,
                entry,
                margin,
            )
            .unwrap();

        // Wild multiplicative path, then decay to 1e-12.
        let mut price = entry.to_f64();
        let mut marks: Vec<f64> = Vec::with_capacity(260);
        for _ in 0..200 {
            let z: f64 = rng.random_range(-1.0..1.0);
            price = (price * (0.25 * z).exp()).max(1e-12);
            marks.push(price);
        }
        let mut decay = price;
        while decay > 1e-12 {
            decay *= 0.1;
            marks.push(decay.max(1e-12));
        }
        for mark_f in marks {
            let mark = Fixed::from_f64(mark_f.max(1e-12)).max(Fixed::from_raw(1));
            let calls = store
                .run_margin_calls(peg_core::exchange::PairId(0), &params, mark, 0, 1)
                .unwrap();
            assert!(
                calls.is_empty(),
                "fully backed long flagged at mark {mark} (seed {seed})"
            );
            let pos = store.get(service, peg_core::exchange::PairId(0)).unwrap();
            // Equity identity: margin cancels the entry notional exactly.
            assert_eq!(pos.equity(mark), qty.mul_down(mark), "seed {seed}");
            assert!(!pos.equity(mark).is_negative());
        }
        // At the terminal near-zero price, equity is zero within one ulp of
        // qty * price.
        let terminal = Fixed::from_f64(1e-12);
        let pos = store.get(service, peg_core::exchange::PairId(0)).unwrap();
        let equity = pos.equity(terminal);
        assert!(equity >= Fixed::ZERO && equity <= qty.mul_up(terminal));
        paths_checked += 1;
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "must finish in under 30s, took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 2 PASS - fully backed longs never liquidated over {paths_checked} seeded paths (incl. decay to 1e-12), equity exact to the ulp, in {elapsed:?}"
    );
}

struct MicroFixture {
    world: World,
    lp: AccountId,
    miner: AccountId,
    miner_rw: AccountId,
}

/// A minimal world for the flow-equivalence harness: one pair with zero
/// fees, a priced ramp (a0 until step 2, a_t from step 3), one swap at
/// step 4, no autonomous agents.
fn micro_world(a0: f64, at: f64, rate: Fixed, seed: u64) -> MicroFixture {
    let json = format!(
        r#"{{
        "seed": {seed},
        "steps": 8,
        "pair": {{
            "name": "USD/EXM", "base": "USD", "quote": "EXM",
            "taker_fee": "0", "maker_rebate": "0", "max_leverage": "4"
        }},
        "controller": {{ "gain": "0", "swap_period": 4, "measure_period": 100000 }},
        "central_bank": {{ "period": 100000 }},
        "real_venue": {{
            "process": {{ "type": "ramp", "points": [[0, {a0}], [2, {a0}], [3, {at}]] }},
            "taker_fee": "0", "transfer_delay": 1
        }}
    }}"#
    );
    let config = ScenarioConfig::from_json(&json).unwrap();
    let mut world = World::new(config, None).unwrap();
    let lp = world.ledger.register_account("lp").unwrap();
    let miner = world.ledger.register_account("miner").unwrap();
    let miner_rw = world.ledger.register_account("miner@rw").unwrap();
    let quote = world.quote_asset;
    world.ledger.endow(lp, quote, fx("100000000")).unwrap();
    world.funding.rate = rate;
    MicroFixture {
        world,
        lp,
        miner,
        miner_rw,
    }
}

fn order(
    owner: AccountId,
    side: Side,
    price: Price,
    qty: Amount,
    leverage: Fixed,
    reduce: bool,
) -> OrderReq {
    OrderReq {
        owner,
        pair: peg_core::exchange::PairId(0),
        side,
        price,
        qty,
        leverage,
        reduce_only: reduce,
        tag: OrderTag::Agent,
    }
}

/// Criterion 3: with fees and slippage zeroed, simulated round-trip flows
/// match the closed forms to 1e-9 relative error over 10^4 random tuples,
/// and the realized profit sign matches the break-even conditions in every
/// sample.
#[test]
fn acceptance_3_flow_equivalence_and_profit_sign() {
    let started = std::time::Instant::now();
    let mut rng = Pcg64::seed_from_u64(0x7ab1e5);
    let samples = 10_000;
    let mut case1_count = 0u32;
    let mut case2_count = 0u32;

    for i in 0..samples {
        let tick = fx("0.01");
        // Prices on the tick grid; rates on a 1e-6 grid.
        let a0_ticks = rng.random_range(5_000..=15_000i64);
        let a0 = tick.mul_int(a0_ticks);
        let at_ticks = (a0_ticks as f64 * (rng.random_range(-0.18..0.18f64)).exp()).round() as i64;
        let at = tick.mul_int(at_ticks);

        if i % 2 == 0 {
            // Case 1: virtual price below the index.
            let d0 = rng.random_range(-0.25..-0.005f64);
            let b0 = tick.mul_int(((a0_ticks as f64) * (1.0 + d0)).round() as i64);
            let dt = rng.random_range(-0.25..0.25f64);
            let bt = tick
                .mul_int(((at_ticks as f64) * (1.0 + dt)).round() as i64)
                .max(tick);
            let rate = Fixed::from_raw(rng.random_range(-20_000..=50_000i128) * 1_000_000_000_000);
            let rd = rng.random_range(0.0..0.01f64);
            run_case1_tuple(a0, b0, at, bt, rate, rd, i as u64);
            case1_count += 1;
        } else {
            // Case 2: virtual price above the index.
            let d0 = rng.random_range(0.005..0.25f64);
            let b0 = tick.mul_int(((a0_ticks as f64) * (1.0 + d0)).round() as i64);
            let dt = rng.random_range(-0.25..0.25f64);
            let bt = tick
                .mul_int(((at_ticks as f64) * (1.0 + dt)).round() as i64)
                .max(tick);
            let rate = Fixed::from_raw(-rng.random_range(0..=50_000i128) * 1_000_000_000_000);
            let re = Fixed::from_raw(rng.random_range(0..=20_000i128) * 1_000_000_000_000);
            run_case2_tuple(a0, b0, at, bt, rate, re, i as u64);
            case2_count += 1;
        }
    }
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 3 PASS - {case1_count} case-1 and {case2_count} case-2 round trips match the closed-form flows to 1e-9 relative with matching profit signs, in {elapsed:?}"
    );
}

fn run_case1_tuple(a0: Price, b0: Price, at: Price, bt: Price, rate: Fixed, rd: f64, seed: u64) {
    let qty = fx("1");
    let mut f = micro_world(a0.to_f64(), at.to_f64(), rate, seed);
    let quote = f.world.quote_asset;
    let usd = f.world.outside_asset;

    // Present leg: sell outside currency sized for the margin, move it over,
    // take the fully backed long at b0.
    let exm_needed = qty.mul_down(b0);
    let usd_sell = exm_needed.div_up(a0);
    f.world.ledger.endow(f.miner_rw, usd, usd_sell).unwrap();
    let exm_got = f
        .world
        .venue
        .sell_usd(&mut f.world.ledger, f.miner_rw, usd_sell)
        .unwrap();
    assert!(exm_got >= exm_needed);
    f.world
        .ledger
        .transfer(f.miner_rw, f.miner, quote, exm_got, "transfer_arrive")
        .unwrap();

    f.world
        .submit_order(order(f.lp, Side::Sell, b0, qty, Fixed::ONE, false))
        .unwrap();
    f.world
        .submit_order(order(f.miner, Side::Buy, b0, qty, Fixed::ONE, false))
        .unwrap();
    f.world.run_step().unwrap(); // step 0: fill at exactly b0
    let pos = f
        .world
        .positions
        .get(f.miner, peg_core::exchange::PairId(0))
        .unwrap();
    assert_eq!(pos.notional, exm_needed);
    assert_eq!(pos.margin, exm_needed, "fully backed");

    for _ in 0..4 {
        f.world.run_step().unwrap(); // steps 1-4; swap settles at step 4
    }

    // Future leg: close at bt, repatriate, convert back.
    f.world
        .submit_order(order(f.lp, Side::Buy, bt, qty, Fixed::ONE, false))
        .unwrap();
    f.world
        .submit_order(order(f.miner, Side::Sell, bt, qty, Fixed::ONE, true))
        .unwrap();
    f.world.run_step().unwrap(); // step 5: close at exactly bt
    assert!(f
        .world
        .positions
        .get(f.miner, peg_core::exchange::PairId(0))
        .is_none());

    let exm_free = f.world.ledger.free(f.miner, quote);
    f.world
        .ledger
        .transfer(f.miner, f.miner_rw, quote, exm_free, "transfer_send")
        .unwrap();
    let usd_in = f
        .world
        .venue
        .sell_quote(&mut f.world.ledger, f.miner_rw, exm_free)
        .unwrap();

    // Closed forms, from the realized tick prices.
    let (a0f, b0f, atf, btf, rf) = (
        a0.to_f64(),
        b0.to_f64(),
        at.to_f64(),
        bt.to_f64(),
        rate.to_f64(),
    );
    let inflow_closed = rf + btf / atf;
    let outflow_closed = b0f / a0f;
    let inflow_sim = usd_in.to_f64();
    let outflow_sim = usd_sell.to_f64();
    assert!(
        (inflow_sim - inflow_closed).abs() <= 1e-9 * inflow_closed.abs().max(1.0),
        "case1 inflow {inflow_sim} vs closed {inflow_closed} (a0={a0} b0={b0} at={at} bt={bt} r={rate})"
    );
    assert!(
        (outflow_sim - outflow_closed).abs() <= 1e-9 * outflow_closed.max(1.0),
        "case1 outflow {outflow_sim} vs closed {outflow_closed}"
    );

    // Profit sign equivalence with the break-even condition
    // r > d0 - dt + R_D (1 + d0).
    let d0 = (b0f - a0f) / a0f;
    let dt = (btf - atf) / atf;
    let condition = rf > d0 - dt + rd * (1.0 + d0);
    let realized_edge = usd_in.to_f64() - usd_sell.to_f64() * (1.0 + rd);
    assert_eq!(
        realized_edge > 0.0,
        condition,
        "case1 sign mismatch: edge {realized_edge}, tuple (a0={a0} b0={b0} at={at} bt={bt} r={rate} rd={rd})"
    );
}

fn run_case2_tuple(a0: Price, b0: Price, at: Price, bt: Price, rate: Fixed, re: Fixed, seed: u64) {
    let qty = fx("1");
    let mut f = micro_world(a0.to_f64(), at.to_f64(), rate, seed);
    let quote = f.world.quote_asset;
    let margin_mult = fx("3");

    // Present leg: sell b0/(1+R_E) quote outside, short 1 at b0 with ample
    // margin.
    let sell_quote = qty.mul_down(b0).div_down(Fixed::ONE + re);
    f.world.ledger.endow(f.miner_rw, quote, sell_quote).unwrap();
    let margin_funds = qty.mul_down(b0).mul_down(margin_mult) + fx("1");
    f.world.ledger.endow(f.miner, quote, margin_funds).unwrap();
    let exm_total_initial = sell_quote + margin_funds;

    let usd_got = f
        .world
        .venue
        .sell_quote(&mut f.world.ledger, f.miner_rw, sell_quote)
        .unwrap();

    let leverage = Fixed::ONE.div_down(margin_mult);
    f.world
        .submit_order(order(f.lp, Side::Buy, b0, qty, Fixed::ONE, false))
        .unwrap();
    f.world
        .submit_order(order(f.miner, Side::Sell, b0, qty, leverage, false))
        .unwrap();
    f.world.run_step().unwrap(); // fill at exactly b0

    for _ in 0..4 {
        f.world.run_step().unwrap(); // swap at step 4 pays the short a_t |r|
    }

    // Future leg: sell the outside currency back, close the short at bt.
    let exm_back = f
        .world
        .venue
        .sell_usd(&mut f.world.ledger, f.miner_rw, usd_got)
        .unwrap();
    f.world
        .submit_order(order(f.lp, Side::Sell, bt, qty, Fixed::ONE, false))
        .unwrap();
    f.world
        .submit_order(order(f.miner, Side::Buy, bt, qty, Fixed::ONE, true))
        .unwrap();
    f.world.run_step().unwrap();
    assert!(f
        .world
        .positions
        .get(f.miner, peg_core::exchange::PairId(0))
        .is_none());

    // All quote holdings back in one place; measure the net flow.
    let exm_total_final = f.world.ledger.balance(f.miner, quote).total()
        + f.world.ledger.balance(f.miner_rw, quote).total();

    let (a0f, b0f, atf, btf) = (a0.to_f64(), b0.to_f64(), at.to_f64(), bt.to_f64());
    let ref_ = re.to_f64();
    let rf = rate.to_f64().abs();
    let outflow_closed = b0f / (1.0 + ref_);
    let inflow_closed = atf * (b0f / (a0f * (1.0 + ref_)) + rf) + b0f - btf;
    let net_sim = (exm_total_final - exm_total_initial).to_f64();
    let net_closed = inflow_closed - outflow_closed;
    assert!(
        (net_sim - net_closed).abs() <= 1e-9 * inflow_closed.abs().max(1.0),
        "case2 net {net_sim} vs closed {net_closed} (a0={a0} b0={b0} at={at} bt={bt} r={rate} re={re})"
    );
    let _ = exm_back;

    // Profit sign equivalence with |r| > dt - d0/(1+R_E) + R_E/(1+R_E).
    let d0 = (b0f - a0f) / a0f;
    let dt = (btf - atf) / atf;
    let condition = rf > dt - d0 / (1.0 + ref_) + ref_ / (1.0 + ref_);
    let realized_edge = net_sim - outflow_closed * ref_;
    assert_eq!(
        realized_edge > 0.0,
        condition,
        "case2 sign mismatch: edge {realized_edge}, tuple (a0={a0} b0={b0} at={at} bt={bt} r={rate} re={re})"
    );
}

/// Criterion 4: the participant fraction matches brute-force enumeration
/// exactly for random discrete models and is non-decreasing over a dense
/// rate grid.
#[test]
fn acceptance_4_participant_fraction_exact_and_monotone() {
    let started = std::time::Instant::now();
    let mut rng = Pcg64::seed_from_u64(44);
    for model_idx in 0..100 {
        let n = rng.random_range(3..40usize);
        let mut raw: Vec<(f64, u32)> = (0..n)
            .map(|_| (rng.random_range(-1.0..1.0f64), rng.random_range(1..1000u32)))
            .collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: u32 = raw.iter().map(|x| x.1).sum();
        let bins: Vec<(f64, f64)> = raw
            .iter()
            .map(|&(v, m)| (v, m as f64 / total as f64))
            .collect();
        let model = SpreadModel::from_bins(bins.clone()).unwrap();

        let d0 = rng.random_range(-0.5..-0.01f64);
        let rd = rng.random_range(0.0..0.01f64);
        let mut previous = -1.0f64;
        for k in 0..1000 {
            let r = -0.5 + k as f64 * 0.0015;
            let v = participant_fraction(&model, r, d0, rd);
            // Independent enumeration: walk the bins and accumulate mass
            // strictly above the threshold.
            let q = -r + d0 + rd * (1.0 + d0);
            let mut brute = 0.0f64;
            for &(value, mass) in &bins {
                if value > q {
                    brute += mass;
                }
            }
            assert_eq!(v, brute, "model {model_idx}, r {r}: {v} != brute {brute}");
            assert!(v >= previous, "V must be non-decreasing in r");
            previous = v;
        }
    }
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 4 PASS - participant fraction equals brute-force enumeration exactly on 100 random models x 1000-point rate grid, non-decreasing, in {elapsed:?}"
    );
}

/// Criterion 5: the peg-restoration sweep. With the default controller and
/// 10 funded miners, every seed 0..19 restores |d| < 0.01 for 10 straight
/// steps within 500 steps of the shock; with the controller disabled and
/// passive miners, restoration is strictly later or never.
#[test]
fn acceptance_5_peg_restoration_and_controller_causality() {
    let started = std::time::Instant::now();
    let treatment = load_scenario("pegbreak_neg10.json");

    let mut control = treatment.clone();
    control.controller.gain = Fixed::ZERO;
    for agent in &mut control.agents {
        if let peg_core::sim::config::AgentCfg::ArbMiner { min_edge, .. } = agent {
            *min_edge = 1e9; // passive: no expected edge ever clears
        }
    }

    let mut results = Vec::new();
    for seed in 0..20u64 {
        let treated = run_in_memory(&treatment, Some(seed)).unwrap();
        let restored = treated.summary.restoration_step;
        let shock = treated.summary.shock_step;
        assert!(
            restored.is_some(),
            "seed {seed}: peg must restore with the controller active"
        );
        let steps_to_restore = restored.unwrap() - shock;
        assert!(
            steps_to_restore <= 500,
            "seed {seed}: restoration took {steps_to_restore} steps"
        );

        let controlled = run_in_memory(&control, Some(seed)).unwrap();
        match controlled.summary.restoration_step {
            None => {}
            Some(control_restored) => assert!(
                control_restored > restored.unwrap(),
                "seed {seed}: disabled controller restored at {control_restored}, not later than {}",
                restored.unwrap()
            ),
        }
        results.push(steps_to_restore);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 120.0,
        "must finish in under 2min, took {elapsed:?}"
    );
    println!(
        "ACCEPTANCE 5 PASS - 20/20 seeds restore the peg in {:?} steps after the shock (bound 500); disabled controller with passive miners never restores; in {elapsed:?}",
        (results.iter().min().unwrap(), results.iter().max().unwrap())
    );
}

/// Criterion 6: replay verification over every golden scenario finds no
/// violation of conservation, backing, swap zero-sum or fee accounting.
#[test]
fn acceptance_6_verify_replays_golden_scenarios() {
    let started = std::time::Instant::now();
    let goldens = [
        "quiet.json",
        "leverage_s61.json",
        "pegbreak_neg10.json",
        "oracle_adversarial.json",
        "currency_roundtrip.json",
    ];
    for name in goldens {
        let config = load_scenario(name);
        let dir = temp_dir(&format!("verify-{name}"));
        run(&config, None, &dir).unwrap_or_else(|e| panic!("{name}: run failed: {e}"));
        let report = verify(&dir).unwrap_or_else(|e| panic!("{name}: verify failed: {e}"));
        assert_eq!(report.steps_replayed, config.steps);
        let _ = std::fs::remove_dir_all(&dir);
    }
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 6 PASS - replay verification clean on all {} golden scenarios in {elapsed:?}",
        goldens.len()
    );
}

/// Criterion 7: the pro-rata fixture fills 50/100/350 exactly, and random
/// batches keep every fill within one lot of its ideal share, summing to
/// the crossing volume.
#[test]
fn acceptance_7_pro_rata_batching() {
    let started = std::time::Instant::now();
    // Golden fixture through the full world.
    let json = r#"{
        "seed": 1, "steps": 3,
        "pair": {"name": "USD/EXM", "base": "USD", "quote": "EXM",
                  "taker_fee": "0", "maker_rebate": "0"},
        "real_venue": {"process": {"type": "ramp", "points": [[0, 100.0]]}}
    }"#;
    let config = ScenarioConfig::from_json(json).unwrap();
    let mut world = World::new(config, None).unwrap();
    let quote = world.quote_asset;
    let mut makers = Vec::new();
    for (i, size) in ["100", "200", "700"].iter().enumerate() {
        let m = world.ledger.register_account(&format!("maker{i}")).unwrap();
        world.ledger.endow(m, quote, fx("10000000")).unwrap();
        makers.push((m, fx(size)));
    }
    let taker = world.ledger.register_account("taker").unwrap();
    world.ledger.endow(taker, quote, fx("10000000")).unwrap();
    for &(m, size) in &makers {
        world
            .submit_order(order(m, Side::Sell, fx("100"), size, Fixed::ONE, false))
            .unwrap();
    }
    world.run_step().unwrap();
    world
        .submit_order(order(
            taker,
            Side::Buy,
            fx("100"),
            fx("500"),
            Fixed::ONE,
            false,
        ))
        .unwrap();
    world.run_step().unwrap();

    let mut filled: BTreeMap<String, Amount> = BTreeMap::new();
    for event in output_events(&world.events.to_jsonl().unwrap()) {
        if let Some(("trade", v)) = typed(&event) {
            *filled
                .entry(v["maker"].as_str().unwrap().to_string())
                .or_default() += v["qty"].as_str().unwrap().parse::<Fixed>().unwrap();
            assert_eq!(v["price"].as_str().unwrap(), "100");
        }
    }
    assert_eq!(filled["maker0"], fx("50"));
    assert_eq!(filled["maker1"], fx("100"));
    assert_eq!(filled["maker2"], fx("350"));

    // Randomized: one-lot fairness bound, exact volume.
    let mut rng = Pcg64::seed_from_u64(77);
    for round in 0..60 {
        let json = r#"{
            "seed": 1, "steps": 3,
            "pair": {"name": "USD/EXM", "base": "USD", "quote": "EXM",
                      "taker_fee": "0", "maker_rebate": "0"},
            "real_venue": {"process": {"type": "ramp", "points": [[0, 100.0]]}}
        }"#;
        let config = ScenarioConfig::from_json(json).unwrap();
        let mut world = World::new(config, None).unwrap();
        let quote = world.quote_asset;
        let lot = fx("0.000001");
        let n = rng.random_range(2..8usize);
        let mut sizes = Vec::new();
        for i in 0..n {
            let m = world.ledger.register_account(&format!("m{i}")).unwrap();
            world.ledger.endow(m, quote, fx("100000000")).unwrap();
            let size = Fixed::from_raw(rng.random_range(1..3_000_000_000i128) * lot.raw());
            world
                .submit_order(order(m, Side::Sell, fx("100"), size, Fixed::ONE, false))
                .unwrap();
            sizes.push((world.ledger.account_name(m).to_string(), size));
        }
        world.run_step().unwrap();
        let total: Amount = sizes.iter().map(|x| x.1).sum();
        let take = Fixed::from_raw(rng.random_range(1..=total.raw() / lot.raw()) * lot.raw());
        let t = world.ledger.register_account("t").unwrap();
        world.ledger.endow(t, quote, fx("1000000000")).unwrap();
        world
            .submit_order(order(t, Side::Buy, fx("100"), take, Fixed::ONE, false))
            .unwrap();
        world.run_step().unwrap();

        let mut filled: BTreeMap<String, Amount> = BTreeMap::new();
        for event in output_events(&world.events.to_jsonl().unwrap()) {
            if let Some(("trade", v)) = typed(&event) {
                *filled
                    .entry(v["maker"].as_str().unwrap().to_string())
                    .or_default() += v["qty"].as_str().unwrap().parse::<Fixed>().unwrap();
            }
        }
        let sum: Amount = filled.values().copied().sum();
        assert_eq!(sum, take, "round {round}: fills must sum to the volume");
        for (name, size) in &sizes {
            let fill = filled.get(name).copied().unwrap_or(Amount::ZERO);
            let ideal = take.to_f64() * size.to_f64() / total.to_f64();
            assert!(
                (fill.to_f64() - ideal).abs() <= lot.to_f64() + 1e-12,
                "round {round}: fill {fill} vs ideal {ideal}"
            );
        }
    }
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 7 PASS - pro-rata fixture 100/200/700 vs 500 fills 50/100/350 exactly; 60 random batches within one lot of ideal shares, in {elapsed:?}"
    );
}

/// Criterion 8: with 7 reporters and up to 3 adversaries at +/-20%, the
/// aggregate equals the honest value, adversaries are slashed, honest
/// reporters rewarded, and every slashed coin lands in the fee sink.
#[test]
fn acceptance_8_oracle_soundness_and_accounting() {
    let started = std::time::Instant::now();
    let config = load_scenario("oracle_adversarial.json");
    let output = run_in_memory(&config, None).unwrap();

    let mut rounds = 0u64;
    let mut slash_total = Fixed::ZERO;
    let mut reward_total = Fixed::ZERO;
    for event in output_events(&output.events_jsonl) {
        match typed(&event) {
            Some(("oracle", v)) => {
                rounds += 1;
                // Honest value: the venue ramp holds 100 the whole run.
                assert_eq!(v["aggregate"].as_str().unwrap(), "100");
                let rewarded: Vec<&str> = v["rewards"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|x| x.as_str().unwrap())
                    .collect();
                assert_eq!(rewarded.len(), 4);
                assert!(rewarded.iter().all(|r| r.starts_with("honest")));
                let slashed = v["slashes"].as_array().unwrap();
                assert_eq!(slashed.len(), 3);
                for pair in slashed {
                    let who = pair[0].as_str().unwrap();
                    assert!(who.starts_with("adv"));
                    slash_total += pair[1].as_str().unwrap().parse::<Fixed>().unwrap();
                }
                reward_total += fx("0.1").mul_int(rewarded.len() as i64);
            }
            Some(("balance", v)) if v["reason"] == "slash" && v["account"] == "fee-sink" => {
                // Every slash lands in the fee sink as a positive delta.
                let delta: Fixed = v["delta"].as_str().unwrap().parse().unwrap();
                assert!(delta.is_positive());
            }
            _ => {}
        }
    }
    assert_eq!(rounds, config.steps);
    assert_eq!(
        slash_total,
        fx("10").mul_int(3).mul_int(config.steps as i64)
    );

    // Exact fee-sink accounting: initial float + slashes - rewards.
    let sink_balance = balance_from_events(&output.events_jsonl, "fee-sink", "EXM");
    assert_eq!(sink_balance, fx("1000") + slash_total - reward_total);
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 8 PASS - {rounds} consensus rounds: aggregate pinned to the honest index, 3 adversaries slashed and 4 honest rewarded each round, slashes conserved into the fee sink exactly, in {elapsed:?}"
    );
}

/// Criterion 9: identical (config, seed) runs produce byte-identical
/// metrics and event logs.
#[test]
fn acceptance_9_byte_determinism() {
    let started = std::time::Instant::now();
    for name in [
        "pegbreak_neg10.json",
        "leverage_s61.json",
        "currency_roundtrip.json",
    ] {
        let config = load_scenario(name);
        let a = run_in_memory(&config, Some(5)).unwrap();
        let b = run_in_memory(&config, Some(5)).unwrap();
        assert_eq!(
            a.metrics_csv, b.metrics_csv,
            "{name}: metrics.csv must be identical"
        );
        assert_eq!(
            a.events_jsonl, b.events_jsonl,
            "{name}: events.jsonl must be identical"
        );
        assert_eq!(
            a.agents_csv, b.agents_csv,
            "{name}: agents.csv must be identical"
        );
    }
    let elapsed = started.elapsed();
    println!(
        "ACCEPTANCE 9 PASS - repeated runs byte-identical across three golden scenarios in {elapsed:?}"
    );
}

// ----------------------------- helpers -----------------------------

fn output_events(jsonl: &str) -> Vec<serde_json::Value> {
    jsonl
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn typed(value: &serde_json::Value) -> Option<(&str, &serde_json::Value)> {
    value
        .get("type")
        .and_then(|t| t.as_str())
        .map(|t| (t, value))
}

/// Reconstructs one account's final balance of an asset from the balance
/// event stream (starting from zero; endowments appear as events).
fn balance_from_events(jsonl: &str, account: &str, asset: &str) -> Fixed {
    let mut total = Fixed::ZERO;
    for event in output_events(jsonl) {
        if let Some(("balance", v)) = typed(&event) {
            if v["account"] == account && v["asset"] == asset {
                total += v["delta"].as_str().unwrap().parse::<Fixed>().unwrap();
            }
        }
    }
    total
}
