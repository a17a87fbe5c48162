//! Scenario execution, parameter sweeps and structured output for the
//! lockdown optimizer.
//!
//! The binary is a thin wrapper over this library so that every command is
//! testable in-process. Configuration comes from an optional TOML file with
//! CLI flags taking precedence; outputs are CSV (schema-versioned, LF,
//! 12 significant digits) and JSON with a stable key order.

pub mod config;
pub mod error;
pub mod herd;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{ScenarioConfig, SolverChoice, SweepAxis, SweepConfig};
pub use error::CliError;
pub use herd::{herd_table, HerdRow};
pub use run::{run_min_time, run_scenario, ScenarioOutcome, Summary};
pub use sweep::{run_sweep, SweepRow};
