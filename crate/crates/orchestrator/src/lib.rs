//! Operative workflows over the training core and the ledger.
//!
//! * [`system::System::run_dpmt`] trains, tunes and deploys a model, logging
//!   every stage on chain.
//! * [`system::System::run_dp`] serves a prediction to an end user and
//!   records the request and the result.
//! * [`reproduce::reproduce_experiment`] runs the experiment matrix over
//!   several seeds.
//!
//! The `dmp` binary exposes all of this from the command line.

pub mod config;
pub mod data;
pub mod error;
pub mod pipeline;
pub mod reproduce;
pub mod system;

pub use config::Config;
pub use data::{parse_dp_input, prepare, read_dp_input, DpInput, PreparedData};
pub use error::{OrchestratorError, Result};
pub use pipeline::{run_pipeline, PipelineOptions, PipelineOutcome, Stage, StageSink};
pub use reproduce::{reproduce_experiment, ExperimentSpec, ReportBundle};
pub use system::{DeployedModel, DpOutcome, DpResult, System};
