//! Configuration, sweep orchestration, scaling fits and reports for the
//! reconlab solvers.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod jobs;
pub mod pipelines;
pub mod scaling;
pub mod selftest;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, Mode};
pub use error::{HarnessError, Result};
pub use experiment::{execute, run_experiment, write_outputs, FitSummary, SweepResult};
pub use jobs::{run_jobs, Job, Row, RowStatus};
pub use scaling::{fit_reconnection_scaling, ScalingFit, ScalingModel};
pub use selftest::{run_spectral_selftest, SelfTestReport};
