//! Experiment plumbing: configuration, benchmark runs, statistics and the
//! fixture suite of worked examples.

pub mod bench;
pub mod config;
pub mod fixtures;
pub mod stats;

pub use bench::{run_benchmark, BenchReport, ResultRow};
pub use config::{ExperimentConfig, NetworkSource, PlannerSpec, Problem};
pub use fixtures::{fixture_suite, FixtureResult};
pub use stats::{paired_bootstrap_t, BootstrapResult};
