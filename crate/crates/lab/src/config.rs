//! Run configuration: a JSON document
//!
//! ```json
//! { "experiment": "growth-rate", "seed": 7, "out": "runs/growth", "threads": 1,
//!   "params": { "radii": [25, 50, 100, 200] } }
//! ```
//!
//! Every key is optional except `experiment`; missing parameters take their
//! defaults and unknown keys are rejected at every level. Command-line flags
//! override the file, which overrides the defaults.

use crate::experiments::{Experiment, Params};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum ConfigError {
    /// The document could not be read or is not valid JSON of the right shape.
    Parse(String),
    /// Schema or cross-field violations, all of them.
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config error: {m}"),
            ConfigError::Invalid(list) => {
                write!(f, "config error: {} problem(s)", list.len())?;
                for m in list {
                    write!(f, "\n  - {m}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn messages(&self) -> Vec<String> {
        match self {
            ConfigError::Parse(m) => vec![m.clone()],
            ConfigError::Invalid(list) => list.clone(),
        }
    }
}

/// The config file as written, before defaults are applied.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub params: Option<Value>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// A config for `experiment` with every parameter at its default.
    pub fn for_experiment(experiment: Experiment) -> Self {
        RawConfig {
            experiment: experiment.name().to_string(),
            ..Default::default()
        }
    }
}

/// Values given on the command line.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// A fully resolved and validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub out: PathBuf,
    pub threads: Option<usize>,
    pub params: Params,
}

impl ExperimentConfig {
    /// Apply overrides and defaults, parse the parameter block and run every
    /// check. All problems are reported together.
    pub fn resolve(raw: RawConfig, overrides: &Overrides) -> Result<Self, ConfigError> {
        let experiment = Experiment::from_name(&raw.experiment).ok_or_else(|| {
            ConfigError::Invalid(vec![format!(
                "unknown experiment {:?}; expected one of {}",
                raw.experiment,
                Experiment::ALL.map(|e| e.name()).join(", ")
            )])
        })?;
        let mut errors = Vec::new();
        let threads = overrides.threads.or(raw.threads);
        if threads == Some(0) {
            errors.push("threads must be at least 1".to_string());
        }
        let params = match experiment.parse_params(raw.params.unwrap_or(Value::Object(Default::default()))) {
            Ok(p) => {
                errors.extend(p.validate());
                Some(p)
            }
            Err(m) => {
                errors.push(format!("params: {m}"));
                None
            }
        };
        match params {
            Some(params) if errors.is_empty() => Ok(ExperimentConfig {
                experiment: experiment.name().to_string(),
                seed: overrides.seed.or(raw.seed).unwrap_or(0),
                out: overrides
                    .out
                    .clone()
                    .or(raw.out)
                    .unwrap_or_else(|| PathBuf::from("runs").join(experiment.name())),
                threads,
                params,
            }),
            _ => Err(ConfigError::Invalid(errors)),
        }
    }

    /// Canonical JSON of the resolved config, used for the manifest hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Validate without running: the list of problems, empty when valid.
pub fn validate(raw: RawConfig, overrides: &Overrides) -> Vec<String> {
    match ExperimentConfig::resolve(raw, overrides) {
        Ok(_) => Vec::new(),
        Err(e) => e.messages(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_top_level_key_is_rejected() {
        let e = RawConfig::parse(r#"{"experiment":"certify","sed":3}"#).unwrap_err();
        assert!(e.to_string().contains("sed"));
    }

    #[test]
    fn flags_win_over_file() {
        let raw = RawConfig::parse(r#"{"experiment":"certify","seed":3,"out":"a"}"#).unwrap();
        let o = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(raw, &o).unwrap();
        assert_eq!((c.seed, c.out), (9, PathBuf::from("a")));
    }
}
