//! Scenario runner for the twin-beam correlation-transfer simulator: TOML
//! configs, single runs, sweeps, Fock-model files and CSV output.

// `!(x > 0.0)` is how validation rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod fock_io;
pub mod output;
pub mod scenario;
pub mod selftest;

pub use config::{Engine, ScenarioConfig};
pub use error::{CliError, Result};
pub use scenario::{run_scenario, run_sweep, RunOutcome, SweepRow};
