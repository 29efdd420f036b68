//! Command-line front end: configuration, the staged pipeline, reports and
//! charts.
//!
//! Every subcommand runs one stage and persists its output in the same
//! layout `pipeline` uses, so a run can be resumed or replayed stage by
//! stage.

pub mod cli;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod stages;
pub mod svg;

pub use config::PipelineConfig;
pub use error::{CliError, CliResult};
pub use pipeline::{run_pipeline, PipelineFailure};
pub use report::{emit_report, validate_report, RunReport};
