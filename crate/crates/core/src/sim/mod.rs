//! Scenario harness: configuration, the real-world venue, the step
//! scheduler, metrics, output files and the replay verifier.

pub mod config;
pub mod events;
pub mod metrics;
pub mod runner;
pub mod venue;
pub mod verify;
pub mod world;

pub use config::ScenarioConfig;
pub use metrics::{restoration_time, MetricsFrame, Summary};
pub use runner::{run, sweep};
pub use verify::verify;
pub use world::World;
