//! Library half of the `lsemix` command-line tool: scenario parsing, report
//! rendering and the subcommand bodies.

pub mod error;
pub mod report;
pub mod run;
pub mod spec;

pub use error::{CliError, Result};
pub use spec::{parse_scenario, BlockSpec, McSpec, OutputsSpec, ScenarioSpec};
