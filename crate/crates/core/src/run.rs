//! Executes a resolved [`RunConfig`]: worker pool, basis cache, dispatch, outputs.

use std::path::PathBuf;

use crate::bergman::BasisCache;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiments::{write_report, ExperimentReport, Runner};

/// Exit status when the acceptance predicate held.
pub const EXIT_PASSED: i32 = 0;
/// Exit status on any error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when the run completed but the predicate failed.
pub const EXIT_FAILED: i32 = 2;

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ExperimentReport,
    pub written: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed {
            EXIT_PASSED
        } else {
            EXIT_FAILED
        }
    }
}

/// `GAF_CACHE_DIR` if set, else the configured cache directory, else `<output_dir>/cache`.
pub fn cache_for(rc: &RunConfig) -> BasisCache {
    BasisCache::from_env_or(rc.cache_dir.clone().unwrap_or_else(|| rc.output_dir.join("cache")))
}

/// Runs `f` on a pool of `workers` threads (available parallelism when None).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("workers: {e}")))?;
    Ok(pool.install(f))
}

/// Runs the experiment and writes report.json, report.csv, plot/*.dat and the resolved
/// config.toml into the output directory.
pub fn run(rc: &RunConfig) -> Result<RunOutcome> {
    let cache = cache_for(rc);
    let report = with_workers(rc.workers, || Runner::with_cache(cache).run(rc.experiment, &rc.config))??;
    let mut written = write_report(&rc.output_dir, &report)?;
    let resolved = rc.output_dir.join("config.toml");
    std::fs::write(&resolved, rc.to_toml())?;
    written.push(resolved);
    Ok(RunOutcome { report, written })
}
