//! Structured event log written as JSONL.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::fixed::{Amount, Fixed, Price};

/// Everything the simulation reports, one JSON object per line.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Balance {
        step: u64,
        account: String,
        asset: String,
        delta: Amount,
        reason: String,
    },
    Trade {
        step: u64,
        pair: String,
        price: Price,
        qty: Amount,
        taker: String,
        maker: String,
        taker_fee: Amount,
        maker_rebate: Amount,
    },
    MarginCall {
        step: u64,
        owner: String,
        pair: String,
        side: String,
        qty: Amount,
        bankruptcy_price: Price,
        trigger_index: Price,
    },
    Liquidation {
        step: u64,
        owner: String,
        pair: String,
        side: String,
        qty: Amount,
        bankruptcy_price: Price,
        fill_price: Price,
        shortfall: Amount,
    },
    Funding {
        step: u64,
        pair: String,
        vwdev: Fixed,
        r: Fixed,
        total_swapped: Amount,
        residue: Amount,
    },
    Rate {
        step: u64,
        r_e: Fixed,
        pool_used: Amount,
        minted: Amount,
    },
    Oracle {
        step: u64,
        sampled: Vec<String>,
        reports: Vec<Price>,
        aggregate: Price,
        rewards: Vec<String>,
        slashes: Vec<(String, Amount)>,
    },
    Conversion {
        step: u64,
        user: String,
        direction: String,
        amount_in: Amount,
        amount_out: Amount,
        fill_price: Price,
        fee: Amount,
        outcome: String,
    },
    Solvency {
        step: u64,
        headroom: Amount,
        ok: bool,
    },
    Shock {
        step: u64,
        kind: String,
    },
    Note {
        step: u64,
        text: String,
    },
}

#[derive(Debug, Default)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> EventLog {
        EventLog::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for event in &self.events {
            let line =
                serde_json::to_string(event).map_err(|e| crate::error::Error::Io(e.to_string()))?;
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(String::from_utf8(buf).expect("jsonl is utf-8"))
    }
}
