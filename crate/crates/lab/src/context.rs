use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::time::Instant;

/// Failure of one named step of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct StageError {
    pub stage: String,
    pub message: String,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for StageError {}

/// Attach a stage label to any displayable error.
pub trait Staged<T> {
    fn stage(self, stage: &str) -> Result<T, StageError>;
}

impl<T, E: fmt::Display> Staged<T> for Result<T, E> {
    fn stage(self, stage: &str) -> Result<T, StageError> {
        self.map_err(|e| StageError {
            stage: stage.to_string(),
            message: e.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

/// Per-run state: the single seeded generator and the stage clock.
pub struct Context {
    pub seed: u64,
    rng: ChaCha8Rng,
    pub timings: Vec<Timing>,
}

impl Context {
    pub fn new(seed: u64) -> Self {
        Context {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            timings: Vec::new(),
        }
    }

    /// Seed for a solver or any other consumer of randomness, drawn from the
    /// run generator so the whole run depends on one seed.
    pub fn next_seed(&mut self) -> u64 {
        self.rng.gen()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Run `f`, logging and recording its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        log::info!("{stage} ...");
        let clock = Instant::now();
        let out = f(self);
        let seconds = clock.elapsed().as_secs_f64();
        log::info!("{stage} done in {seconds:.2} s");
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds,
        });
        out
    }

    /// Total recorded seconds of stages whose label starts with `prefix`.
    pub fn seconds(&self, prefix: &str) -> f64 {
        self.timings
            .iter()
            .filter(|t| t.stage.starts_with(prefix))
            .map(|t| t.seconds)
            .sum()
    }
}
