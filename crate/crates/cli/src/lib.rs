//! Experiment runner: configuration files in, result rows out.

pub mod config;
pub mod error;
pub mod experiments;
pub mod row;

pub use config::{Experiment, ExperimentConfig, Format};
pub use error::{CliError, Result};
pub use experiments::{compute, run};
pub use row::{ParamValue, ResultRow};

/// Exit status for a completed run: 1 when any row fails, else 0.
pub fn rows_exit_code(rows: &[ResultRow]) -> i32 {
    if rows.iter().all(|r| r.pass) {
        0
    } else {
        1
    }
}
