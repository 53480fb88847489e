//! The experimental apparatus: workloads, lockstep oracle trials, calibration,
//! scaling runs and the timing-guided replay attack.

pub mod adversary;
pub mod calibrate;
pub mod config;
pub mod oracle;
pub mod scaling;
pub mod selftest;
pub mod trial;
pub mod workload;

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dictionary::DictError;

pub use adversary::{adversarial_replay, adversary_experiment, AdversaryConfig, AdversaryReport};
pub use calibrate::{calibrate, CalibrationConfig, CalibrationReport};
pub use config::{ConfigError, Manifest, RunConfig};
pub use scaling::{scaling_experiment, ScalingConfig, ScalingReport};
pub use trial::{run_trial, run_trial_with, CostTrace, Implementation, TrialOptions, TrialOutcome};
pub use workload::{KeyDistribution, Op, OpMix, WorkloadSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error(transparent)]
    Dict(#[from] DictError),
    #[error("adversarial replay needs the cost trace of a completed pilot trial")]
    MissingPilotTrace,
    #[error("{0} oracle mismatches")]
    OracleMismatch(u64),
}

pub const RECOMMENDATION_SCHEMA_VERSION: u32 = 1;

/// Calibrated defaults for L and C, as written by [`calibrate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recommendation {
    pub schema_version: u32,
    pub epsilon: f64,
    pub move_budget: u32,
    pub queue_constant: f64,
    pub n_list: Vec<usize>,
    pub seeds: u64,
    pub target_fraction: f64,
}

impl Recommendation {
    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("recommendation serializes")
    }
}

/// The checked-in calibration result that experiments use when a config does
/// not pin L or C.
pub const CALIBRATION_JSON: &str = include_str!("../../calibration.json");

pub fn calibrated() -> &'static Recommendation {
    static CELL: OnceLock<Recommendation> = OnceLock::new();
    CELL.get_or_init(|| {
        Recommendation::from_json(CALIBRATION_JSON).expect("embedded calibration.json is valid")
    })
}
