//! Scenario files, runs, sweeps, convergence studies and the acceptance
//! suite.

pub mod config;
pub mod scenario;
pub mod study;
pub mod verify;

pub use config::{parse_config, Scenario, Tier};
pub use scenario::{run_scenario, run_sweep, simulate, worker_budget};
pub use study::{convergence_study, ConvergenceTable, Reference};
