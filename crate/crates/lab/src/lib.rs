//! Reproducible experiment runner for `vortexlab-core`.
//!
//! A run reads an [`ExperimentConfig`], validates it completely before any
//! computation, runs the named experiment with one seeded generator and
//! writes CSV/JSON artifacts plus `manifest.json` into the output directory.
//! Everything except the manifest is byte-identical across runs with the
//! same config and seed.

pub mod config;
pub mod context;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, ExperimentConfig, Overrides, RawConfig};
pub use context::{Context, StageError};
pub use experiments::{Experiment, Outcome, Params};
pub use output::{Manifest, OutDir};

use std::path::PathBuf;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("experiment failed at {0}")]
    Experiment(#[from] StageError),
    #[error("writing {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl RunError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// What a finished run leaves behind.
#[derive(Debug)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub manifest: Manifest,
    pub out: PathBuf,
}

/// Set the worker count of the global thread pool. Only the first call in a
/// process has an effect.
pub fn set_threads(threads: Option<usize>) -> usize {
    #[cfg(feature = "parallel")]
    {
        if let Some(n) = threads {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        1
    }
}

/// Run a validated config and write its artifacts.
pub fn run(config: &ExperimentConfig) -> Result<RunSummary, RunError> {
    let threads = set_threads(config.threads);
    let clock = Instant::now();
    let mut ctx = Context::new(config.seed);
    log::info!(
        "running {} (seed {}, {} threads)",
        config.params.experiment().name(),
        config.seed,
        threads
    );
    let outcome = experiments::run(&config.params, &mut ctx)?;
    let mut out = OutDir::create(&config.out).map_err(|e| RunError::Io {
        path: config.out.clone(),
        message: e.to_string(),
    })?;
    let io = |path: PathBuf| {
        move |e: std::io::Error| RunError::Io {
            path,
            message: e.to_string(),
        }
    };
    outcome.write(&mut out).map_err(io(config.out.clone()))?;
    let manifest =
        Manifest::build(config, &out, threads, &ctx, clock.elapsed().as_secs_f64()).map_err(io(config.out.clone()))?;
    out.write_manifest(&manifest)
        .map_err(io(config.out.join("manifest.json")))?;
    Ok(RunSummary {
        outcome,
        manifest,
        out: config.out.clone(),
    })
}
