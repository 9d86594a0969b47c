//! Experiment harness: objectives, training loop, configs, sweeps and the
//! invariant suite behind the `teon` binary.

pub mod check;
pub mod config;
pub mod gradcheck;
pub mod run;
pub mod sweep;
pub mod tasks;

pub use config::RunConfig;
pub use run::{run, train, train_task, MetricsRecord, RunOutcome, RunSummary, METRICS_HEADER};
pub use sweep::{sweep, SweepRow};
