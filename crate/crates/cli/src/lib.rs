//! Configuration, orchestration, persistence and reporting for the wgmc
//! experiment suites.

pub mod config;
pub mod error;
pub mod manifest;
pub mod report;
pub mod run;
pub mod suites;
pub mod validate;

pub use config::{ExperimentConfig, Kind, Overrides};
pub use error::{CliError, Result};
pub use manifest::RunManifest;
pub use report::{report, Report};
pub use run::run;
pub use validate::{validate, Diagnostic, Validation};

pub const WORKERS_ENV: &str = "WGMC_WORKERS";

/// `--workers`, else `WGMC_WORKERS`, else 1.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return if w > 0 { Ok(w) } else { Err(CliError::Invalid("--workers must be positive".into())) };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(CliError::Invalid(format!("{WORKERS_ENV}={s:?} is not a positive integer"))),
        },
        Err(_) => Ok(1),
    }
}
