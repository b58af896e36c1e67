//! Scenario runner for the coupled Klein-Gordon laboratory: config
//! parsing, initial-data construction, orchestration and persistence.

pub mod config;
pub mod initial;
pub mod runner;
pub mod verify;

pub use config::{Scenario, ScenarioConfig};
