//! Run configuration files and run manifests.
//!
//! A config is JSON or TOML (chosen by file extension, `.toml` for TOML) with a
//! mandatory `schema_version` and one optional section per experiment. The
//! schema is documented in `docs/formats.md`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::harness::adversary::AdversaryConfig;
use crate::harness::calibrate::CalibrationConfig;
use crate::harness::scaling::ScalingConfig;
use crate::harness::trial::Implementation;
use crate::harness::workload::WorkloadSpec;
use crate::hashing::{HashSeed, SeedParseError};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed TOML config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unsupported schema_version {0}, expected {CONFIG_SCHEMA_VERSION}")]
    Version(u32),
    #[error("bad hash_seed: {0}")]
    Seed(#[from] SeedParseError),
    #[error("config has no [{0}] section")]
    MissingSection(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfigFormat {
    Json,
    Toml,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialConfig {
    pub workload: WorkloadSpec,
    #[serde(default = "both_implementations")]
    pub implementations: Vec<Implementation>,
    /// Trial `i` runs with `rng_seed + i` and the `i`-th derived hash seed.
    #[serde(default = "one")]
    pub seeds: u64,
}

fn both_implementations() -> Vec<Implementation> {
    Implementation::BOTH.to_vec()
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Hex seed material for the hash functions; `--seed` and `DEAMORT_SEED` override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hash_seed: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<TrialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate: Option<CalibrationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<AdversaryConfig>,
}

impl RunConfig {
    pub fn empty() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            hash_seed: None,
            trial: None,
            calibrate: None,
            scaling: None,
            adversary: None,
        }
    }

    pub fn parse(text: &str, format: ConfigFormat) -> Result<Self, ConfigError> {
        let cfg: RunConfig = match format {
            ConfigFormat::Json => serde_json::from_str(text)?,
            ConfigFormat::Toml => toml::from_str(text)?,
        };
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(ConfigError::Version(cfg.schema_version));
        }
        cfg.seed()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("toml") => ConfigFormat::Toml,
            _ => ConfigFormat::Json,
        };
        RunConfig::parse(&text, format)
    }

    /// The configured hash seed, or material 0.
    pub fn seed(&self) -> Result<HashSeed, ConfigError> {
        match &self.hash_seed {
            Some(hex) => Ok(HashSeed::from_hex(hex)?),
            None => Ok(HashSeed::default()),
        }
    }
}

/// Everything needed to reproduce a run. Only `timestamp` varies between
/// identical invocations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub subcommand: String,
    pub hash_seed: String,
    pub config: RunConfig,
    pub outputs: Vec<String>,
    pub timestamp: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML_CFG: &str = r#"
schema_version = 1
hash_seed = "0xbeef"

[scaling]
n_list = [1024, 4096]
seeds = 3

[trial]
seeds = 2

[trial.workload]
n_ops = 1000
op_mix = { insert = 50, lookup = 40, delete = 10 }
key_distribution = "uniform_random"
rng_seed = 7
dictionary_params = { capacity = 256, epsilon = 0.1 }
"#;

    #[test]
    fn toml_config() {
        let cfg = RunConfig::parse(TOML_CFG, ConfigFormat::Toml).unwrap();
        assert_eq!(cfg.seed().unwrap().material, 0xbeef);
        assert_eq!(cfg.scaling.as_ref().unwrap().n_list, vec![1024, 4096]);
        let trial = cfg.trial.unwrap();
        assert_eq!(trial.seeds, 2);
        assert_eq!(trial.implementations, Implementation::BOTH.to_vec());
        assert_eq!(trial.workload.dictionary_params.capacity, 256);
    }

    #[test]
    fn json_roundtrip() {
        let cfg = RunConfig::parse(TOML_CFG, ConfigFormat::Toml).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::parse(&json, ConfigFormat::Json).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_version_and_seed() {
        assert!(matches!(
            RunConfig::parse(r#"{"schema_version": 2}"#, ConfigFormat::Json),
            Err(ConfigError::Version(2))
        ));
        assert!(matches!(
            RunConfig::parse(r#"{"schema_version": 1, "hash_seed": "xyz"}"#, ConfigFormat::Json),
            Err(ConfigError::Seed(_))
        ));
        assert!(RunConfig::parse(r#"{"schema_version": 1, "bogus": 1}"#, ConfigFormat::Json).is_err());
    }
}
