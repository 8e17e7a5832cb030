//! Command-line front end for the peg simulator.
//!
//! Exit codes: 0 success, 2 configuration error, 3 invariant violation
//! (including replay mismatches found by `verify`), 1 anything else.
//! Set `PEG_SIM_LOG=info` or `debug` for progress output on stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use peg_core::error::Error;
use peg_core::sim::{self, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "peg-sim",
    about = "Deterministic stablecoin-peg market simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write metrics, events and a summary.
    Run {
        /// Scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scenario once per parameter value (parallel workers).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Dotted path and comma-separated values, e.g.
        /// `controller.gain=0,0.05,0.1`.
        #[arg(long)]
        param: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a finished run directory and re-check every invariant.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
}

fn log_enabled() -> bool {
    matches!(
        std::env::var("PEG_SIM_LOG").as_deref(),
        Ok("info") | Ok("debug") | Ok("trace")
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::ConfigInvalid(_) => ExitCode::from(2),
                Error::InvariantViolation(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let scenario = ScenarioConfig::from_file(&config)?;
            let summary = sim::run(&scenario, seed, &out)?;
            if log_enabled() {
                eprintln!(
                    "run complete: {} steps, {} trades, restoration {:?}",
                    summary.steps, summary.trade_count, summary.restoration_step
                );
            }
            println!("{}", out.join("summary.json").display());
            Ok(())
        }
        Command::Sweep {
            config,
            param,
            seed,
            out,
        } => {
            let json = std::fs::read_to_string(&config)
                .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", config.display())))?;
            let (path, raw_values) = param.split_once('=').ok_or_else(|| {
                Error::ConfigInvalid("sweep param must look like path=v1,v2,...".into())
            })?;
            let values: Vec<String> = raw_values.split(',').map(str::to_string).collect();
            if values.is_empty() {
                return Err(Error::ConfigInvalid(
                    "sweep needs at least one value".into(),
                ));
            }
            let rows = sim::sweep(&json, path, &values, seed, &out)?;
            for row in &rows {
                if log_enabled() {
                    eprintln!(
                        "{path}={}: restoration {:?}, max |d| {}",
                        row.value, row.summary.restoration_step, row.summary.max_abs_spread
                    );
                }
            }
            println!("{}", out.join("sweep.csv").display());
            Ok(())
        }
        Command::Verify { out } => {
            let report = sim::verify(&out)?;
            println!(
                "ok: replayed {} steps, {} frames, {} trades, {} funding events",
                report.steps_replayed,
                report.frames_checked,
                report.trades_checked,
                report.funding_events_checked
            );
            Ok(())
        }
    }
}
