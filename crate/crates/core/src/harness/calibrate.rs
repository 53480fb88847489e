//! Sweep of move budget L and queue constant C over fill-to-capacity runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Parameters, DEFAULT_EPSILON};
use crate::harness::trial::{run_trial_with, Implementation, TrialOptions};
use crate::harness::workload::WorkloadSpec;
use crate::harness::{HarnessError, Recommendation, RECOMMENDATION_SCHEMA_VERSION};
use crate::hashing::HashSeed;

pub const DEFAULT_TARGET_FRACTION: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    pub n_list: Vec<usize>,
    pub seeds: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_l_values")]
    pub l_values: Vec<u32>,
    #[serde(default = "default_c_values")]
    pub c_values: Vec<f64>,
    #[serde(default = "default_target")]
    pub target_fraction: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_l_values() -> Vec<u32> {
    (1..=8).collect()
}

fn default_c_values() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

fn default_target() -> f64 {
    DEFAULT_TARGET_FRACTION
}

impl CalibrationConfig {
    pub fn new(n_list: Vec<usize>, seeds: u64) -> Self {
        CalibrationConfig {
            n_list,
            seeds,
            epsilon: DEFAULT_EPSILON,
            l_values: default_l_values(),
            c_values: default_c_values(),
            target_fraction: DEFAULT_TARGET_FRACTION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCell {
    pub n: usize,
    pub move_budget: u32,
    pub queue_constant: f64,
    pub queue_threshold: usize,
    pub zero_rehash_trials: u64,
    pub zero_rehash_fraction: f64,
    /// Longest queue seen in any trial, up to its first rehash.
    pub max_queue_len: u32,
    /// Longest queue seen in trials that never rehashed.
    pub max_queue_len_clean: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub config: CalibrationConfig,
    pub cells: Vec<CalibrationCell>,
    pub recommended: Option<Recommendation>,
    /// `(n, C, L)` triples where the max queue length rose when L grew from the
    /// previous L value.
    pub monotonicity_violations: Vec<(usize, f64, u32)>,
}

impl CalibrationReport {
    pub fn cell(&self, n: usize, l: u32, c: f64) -> Option<&CalibrationCell> {
        self.cells
            .iter()
            .find(|x| x.n == n && x.move_budget == l && x.queue_constant == c)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,move_budget,queue_constant,queue_threshold,zero_rehash_trials,\
             zero_rehash_fraction,max_queue_len,max_queue_len_clean\n",
        );
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.n,
                c.move_budget,
                c.queue_constant,
                c.queue_threshold,
                c.zero_rehash_trials,
                c.zero_rehash_fraction,
                c.max_queue_len,
                c.max_queue_len_clean
            ));
        }
        out
    }
}

/// Fill-to-capacity trial stopped at the first rehash: `(rehashed, max queue length)`.
pub fn fill_probe(params: Parameters, rng_seed: u64) -> Result<(bool, u32), HarnessError> {
    let w = WorkloadSpec::fill(params, rng_seed);
    let opts = TrialOptions {
        stop_at_rehash: true,
        ..TrialOptions::default()
    };
    let (out, _) = run_trial_with(&w, Implementation::Deamortized, &opts)?;
    if out.oracle_mismatches != 0 {
        return Err(HarnessError::OracleMismatch(out.oracle_mismatches));
    }
    let rehashed = out.stats.rehash_count > 0;
    Ok((rehashed, out.stats.max_queue_len))
}

pub fn calibrate(cfg: &CalibrationConfig, base_seed: HashSeed) -> Result<CalibrationReport, HarnessError> {
    let mut grid = Vec::new();
    for &n in &cfg.n_list {
        for &l in &cfg.l_values {
            for &c in &cfg.c_values {
                grid.push((n, l, c));
            }
        }
    }
    let cells = grid
        .par_iter()
        .map(|&(n, l, c)| {
            let base = Parameters::new(n, cfg.epsilon)
                .with_move_budget(l)
                .with_queue_constant(c);
            base.validate()?;
            let results = (0..cfg.seeds)
                .into_par_iter()
                .map(|s| fill_probe(base.with_seed(base_seed.for_trial(s)), s))
                .collect::<Result<Vec<_>, _>>()?;
            let zero = results.iter().filter(|r| !r.0).count() as u64;
            Ok(CalibrationCell {
                n,
                move_budget: l,
                queue_constant: c,
                queue_threshold: base.queue_threshold(),
                zero_rehash_trials: zero,
                zero_rehash_fraction: if cfg.seeds == 0 {
                    1.0
                } else {
                    zero as f64 / cfg.seeds as f64
                },
                max_queue_len: results.iter().map(|r| r.1).max().unwrap_or(0),
                max_queue_len_clean: results
                    .iter()
                    .filter(|r| !r.0)
                    .map(|r| r.1)
                    .max()
                    .unwrap_or(0),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let mut report = CalibrationReport {
        config: cfg.clone(),
        cells,
        recommended: None,
        monotonicity_violations: Vec::new(),
    };

    let mut ls = cfg.l_values.clone();
    ls.sort_unstable();
    ls.dedup();
    let mut cs = cfg.c_values.clone();
    cs.sort_by(f64::total_cmp);
    cs.dedup();

    'search: for &l in &ls {
        for &c in &cs {
            let ok = cfg.n_list.iter().all(|&n| {
                report
                    .cell(n, l, c)
                    .is_some_and(|x| x.zero_rehash_fraction >= cfg.target_fraction)
            });
            if ok {
                report.recommended = Some(Recommendation {
                    schema_version: RECOMMENDATION_SCHEMA_VERSION,
                    epsilon: cfg.epsilon,
                    move_budget: l,
                    queue_constant: c,
                    n_list: cfg.n_list.clone(),
                    seeds: cfg.seeds,
                    target_fraction: cfg.target_fraction,
                });
                break 'search;
            }
        }
    }

    for &n in &cfg.n_list {
        for &c in &cs {
            for pair in ls.windows(2) {
                let (a, b) = (report.cell(n, pair[0], c), report.cell(n, pair[1], c));
                if let (Some(a), Some(b)) = (a, b) {
                    if b.max_queue_len > a.max_queue_len {
                        report.monotonicity_violations.push((n, c, pair[1]));
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generous_settings_never_rehash() {
        let cfg = CalibrationConfig {
            n_list: vec![8, 16],
            seeds: 10,
            epsilon: 1.0,
            l_values: vec![8],
            c_values: vec![8.0],
            target_fraction: 0.95,
        };
        let r = calibrate(&cfg, HashSeed::new(3)).unwrap();
        assert!(r.cells.iter().all(|c| c.zero_rehash_fraction == 1.0));
        let rec = r.recommended.unwrap();
        assert_eq!((rec.move_budget, rec.queue_constant), (8, 8.0));
    }
}
