//! Run configuration, trajectory output, drift summaries, order studies and
//! regression fixtures for `poisson-integrators`.

pub mod config;
pub mod error;
pub mod fixtures;
pub mod record;
pub mod run;

pub use config::{NewtonConfig, OrderStudyConfig, Output, RunConfig, StructureConfig};
pub use error::{HarnessError, Result};
pub use fixtures::{check_fixture, run_fixtures, Fixture, FixtureOutcome};
pub use record::{
    content_hash, drift_report, log_norm, DriftReport, Metadata, TrajectoryRecord, TrajectoryRow,
};
pub use run::{integrate, loglog_slope, order_study, run, write_run, OrderStudy, RunFiles};
