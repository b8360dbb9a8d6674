//! Scenario files, planning pipeline, output formats and the `stgcs`
//! command line on top of [`stgcs_core`].

pub mod cli;
pub mod cluttered;
pub mod output;
pub mod pipeline;
pub mod scenario;
pub mod svg;

pub use cli::run_cli;
pub use pipeline::{plan, Plan, PlanError};
pub use scenario::{load_scenario, Scenario};
