//! Run configuration, experiment pipelines and report output behind the
//! `wellspec` binary.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, RunConfig};
pub use experiments::run;
pub use report::{RunReport, RunStatus};
