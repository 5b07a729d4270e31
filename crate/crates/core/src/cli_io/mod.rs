//! Command-line front end, JSON configs, run reports and model exporters.

mod ampl;
mod cli;
mod lp;
mod report;

pub use ampl::export_ampl;
pub use cli::cli_main;
pub use lp::{export_lp, parse_lp};
pub use report::{instance_hash, ConfigFile, ParamSet, ParamSource, RunReport};
