//! Deterministic two-robot relay navigation simulator and episode generator.
//!
//! The crate is organized bottom-up: [`world`] holds the grid scene and its
//! geodesic oracles, [`rove`] labels rooms and generates verified episodes,
//! [`svb`] is the semantic bus, [`edr`] turns events into replanning
//! decisions, [`agent`] is the per-robot navigation policy, [`spe`] runs
//! rollouts and [`metrics`] scores them.

pub mod agent;
pub mod cli;
pub mod edr;
pub mod metrics;
pub mod rove;
pub mod seed;
pub mod spe;
pub mod svb;
pub mod task;
pub mod world;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
