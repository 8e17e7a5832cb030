//! Scenario execution and output files.
//!
//! `run` produces four artifacts in the output directory: `metrics.csv`,
//! `events.jsonl`, `agents.csv` and `summary.json`, plus `config.json` (the
//! resolved configuration including the effective seed) so a run can be
//! replayed bit-for-bit.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::sim::config::ScenarioConfig;
use crate::sim::metrics::{frames_to_csv, restoration_time, Summary};
use crate::sim::world::World;

/// Everything a finished run produced.
pub struct RunOutput {
    pub summary: Summary,
    pub metrics_csv: String,
    pub events_jsonl: String,
    pub agents_csv: String,
    pub config_json: String,
}

/// Runs a scenario to completion in memory.
pub fn run_in_memory(config: &ScenarioConfig, seed_override: Option<u64>) -> Result<RunOutput> {
    let mut world = World::new(config.clone(), seed_override)?;
    world.run_to_end()?;
    let summary = summarize(&world);

    let mut resolved = config.clone();
    resolved.seed = world.seed;
    let config_json =
        serde_json::to_string_pretty(&resolved).map_err(|e| Error::Io(e.to_string()))?;

    Ok(RunOutput {
        summary,
        metrics_csv: frames_to_csv(&world.frames),
        events_jsonl: world.events.to_jsonl()?,
        agents_csv: world.agents_csv().to_string(),
        config_json,
    })
}

fn summarize(world: &World) -> Summary {
    let spreads: Vec<(u64, Fixed)> = world.frames.iter().map(|f| (f.step, f.spread)).collect();
    let shock_step = world.config.shock_step();
    let restoration_step = restoration_time(
        &spreads,
        shock_step,
        world.config.metrics.epsilon,
        world.config.metrics.persistence,
    );
    let max_abs_spread = spreads
        .iter()
        .map(|(_, d)| d.abs())
        .max()
        .unwrap_or(Fixed::ZERO);
    let trade_count = world
        .events
        .events()
        .iter()
        .filter(|e| matches!(e, crate::sim::events::Event::Trade { .. }))
        .count() as u64;
    let last = world.frames.last();
    Summary {
        seed: world.seed,
        steps: world.config.steps,
        shock_step,
        restoration_step,
        max_abs_spread,
        liquidation_count: world.liquidations.len() as u64,
        liquidations: world.liquidations.clone(),
        minted_base: world.ledger.minted_total(world.quote_asset),
        solvency_ok: last
            .map(|f| !f.solvency_headroom.is_negative())
            .unwrap_or(true),
        outstanding_pegged: last.map(|f| f.outstanding_pegged).unwrap_or(Fixed::ZERO),
        trade_count,
        invariant_violations: world.invariant_violations,
    }
}

/// Runs a scenario and writes the artifacts into `out_dir`.
pub fn run(config: &ScenarioConfig, seed_override: Option<u64>, out_dir: &Path) -> Result<Summary> {
    let output = run_in_memory(config, seed_override)?;
    write_output(&output, out_dir)?;
    Ok(output.summary)
}

pub fn write_output(output: &RunOutput, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("metrics.csv"), &output.metrics_csv)?;
    fs::write(out_dir.join("events.jsonl"), &output.events_jsonl)?;
    fs::write(out_dir.join("agents.csv"), &output.agents_csv)?;
    fs::write(out_dir.join("config.json"), &output.config_json)?;
    let summary_json =
        serde_json::to_string_pretty(&output.summary).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(out_dir.join("summary.json"), summary_json)?;
    Ok(())
}

/// One grid point of a parameter sweep.
#[derive(Debug)]
pub struct SweepRow {
    pub value: String,
    pub summary: Summary,
    pub out_dir: PathBuf,
}

/// Runs the scenario once per parameter value, in parallel workers that
/// share nothing. `param_path` is a dotted JSON path into the config, e.g.
/// `controller.gain`.
pub fn sweep(
    config_json: &str,
    param_path: &str,
    values: &[String],
    seed_override: Option<u64>,
    out_root: &Path,
) -> Result<Vec<SweepRow>> {
    let base: serde_json::Value =
        serde_json::from_str(config_json).map_err(|e| Error::ConfigInvalid(e.to_string()))?;

    let jobs: Vec<(String, ScenarioConfig, PathBuf)> = values
        .iter()
        .map(|value| {
            let mut patched = base.clone();
            set_path(&mut patched, param_path, value)?;
            let config: ScenarioConfig =
                serde_json::from_value(patched).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
            config.validate()?;
            let dir = out_root.join(format!(
                "{}={}",
                param_path.replace('.', "_"),
                value.replace('/', "_")
            ));
            Ok((value.clone(), config, dir))
        })
        .collect::<Result<Vec<_>>>()?;

    let results: Vec<Result<SweepRow>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(value, config, dir)| {
                scope.spawn(move || {
                    let summary = run(config, seed_override, dir)?;
                    Ok(SweepRow {
                        value: value.clone(),
                        summary,
                        out_dir: dir.clone(),
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });

    let mut rows = Vec::new();
    for row in results {
        rows.push(row?);
    }
    let mut csv = String::from("param,value,restoration_step,max_abs_spread,liquidations,trades\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            param_path,
            row.value,
            row.summary
                .restoration_step
                .map(|s| s.to_string())
                .unwrap_or_else(|| "none".into()),
            row.summary.max_abs_spread,
            row.summary.liquidation_count,
            row.summary.trade_count,
        ));
    }
    fs::create_dir_all(out_root)?;
    fs::write(out_root.join("sweep.csv"), csv)?;
    Ok(rows)
}

/// Sets a dotted-path field to a JSON scalar parsed from `raw`.
fn set_path(root: &mut serde_json::Value, path: &str, raw: &str) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i == parts.len() - 1;
        let obj = node.as_object_mut().ok_or_else(|| {
            Error::ConfigInvalid(format!("sweep path {path} does not address an object"))
        })?;
        if last {
            let value: serde_json::Value = serde_json::from_str(raw)
                .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    Ok(())
}
