//! Worst-case move counts of both implementations as the capacity grows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Parameters, DEFAULT_EPSILON};
use crate::harness::trial::{run_trial, Implementation, TrialOutcome};
use crate::harness::workload::WorkloadSpec;
use crate::harness::{calibrated, HarnessError};
use crate::hashing::HashSeed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingConfig {
    pub n_list: Vec<usize>,
    pub seeds: u64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub move_budget: Option<u32>,
    #[serde(default)]
    pub queue_constant: Option<f64>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub seed_index: u64,
    /// Largest move count of any de-amortized operation that did not rehash.
    pub deamortized_max_moves: u32,
    /// Largest move count of any baseline insert, rehashing ones included.
    pub baseline_max_moves: u32,
    pub deamortized_rehashes: u64,
    pub baseline_rehashes: u64,
    pub deamortized_max_queue_len: u32,
    pub deamortized_cap_violations: u64,
    pub oracle_mismatches: u64,
    pub rehash_failures: u64,
    pub deamortized_utilization: f64,
    pub baseline_utilization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSummary {
    pub n: usize,
    pub total_slots: usize,
    pub queue_threshold: usize,
    pub expected_full_load_utilization: f64,
    pub deamortized_max_moves: u32,
    pub deamortized_min_of_max_moves: u32,
    pub baseline_max_moves: u32,
    pub baseline_mean_max_moves: f64,
    pub zero_rehash_trials: u64,
    pub max_clean_queue_len: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub config: ScalingConfig,
    pub move_budget: u32,
    pub queue_constant: f64,
    pub rows: Vec<ScalingRow>,
    pub summary: Vec<ScalingSummary>,
    /// Seeds whose baseline maximum at the largest n exceeds that at the smallest n.
    pub baseline_growth_seeds: u64,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n,seed_index,deamortized_max_moves,baseline_max_moves,deamortized_rehashes,\
             baseline_rehashes,deamortized_max_queue_len,deamortized_cap_violations,\
             oracle_mismatches,rehash_failures,deamortized_utilization,baseline_utilization\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.n,
                r.seed_index,
                r.deamortized_max_moves,
                r.baseline_max_moves,
                r.deamortized_rehashes,
                r.baseline_rehashes,
                r.deamortized_max_queue_len,
                r.deamortized_cap_violations,
                r.oracle_mismatches,
                r.rehash_failures,
                r.deamortized_utilization,
                r.baseline_utilization
            ));
        }
        out
    }

    pub fn rows_for(&self, n: usize) -> impl Iterator<Item = &ScalingRow> {
        self.rows.iter().filter(move |r| r.n == n)
    }
}

fn row(n: usize, s: u64, de: &TrialOutcome, base: &TrialOutcome) -> ScalingRow {
    ScalingRow {
        n,
        seed_index: s,
        deamortized_max_moves: de.max_moves_without_rehash,
        baseline_max_moves: base.stats.insert.max_moves,
        deamortized_rehashes: de.stats.rehash_count,
        baseline_rehashes: base.stats.rehash_count,
        deamortized_max_queue_len: de.stats.max_queue_len,
        deamortized_cap_violations: de.cap_violations,
        oracle_mismatches: de.oracle_mismatches + base.oracle_mismatches,
        rehash_failures: de.rehash_failures + base.rehash_failures,
        deamortized_utilization: de.final_utilization,
        baseline_utilization: base.final_utilization,
    }
}

pub fn scaling_experiment(
    cfg: &ScalingConfig,
    base_seed: HashSeed,
) -> Result<ScalingReport, HarnessError> {
    let defaults = calibrated();
    let move_budget = cfg.move_budget.unwrap_or(defaults.move_budget);
    let queue_constant = cfg.queue_constant.unwrap_or(defaults.queue_constant);
    let grid: Vec<(usize, u64)> = cfg
        .n_list
        .iter()
        .flat_map(|&n| (0..cfg.seeds).map(move |s| (n, s)))
        .collect();
    let rows = grid
        .par_iter()
        .map(|&(n, s)| {
            let params = Parameters::new(n, cfg.epsilon)
                .with_move_budget(move_budget)
                .with_queue_constant(queue_constant)
                .with_seed(base_seed.for_trial(s));
            let w = WorkloadSpec::fill(params, s);
            let de = run_trial(&w, Implementation::Deamortized)?;
            let base = run_trial(&w, Implementation::AmortizedBaseline)?;
            Ok(row(n, s, &de, &base))
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;

    let summary = cfg
        .n_list
        .iter()
        .map(|&n| {
            let p = Parameters::new(n, cfg.epsilon).with_queue_constant(queue_constant);
            let mine: Vec<&ScalingRow> = rows.iter().filter(|r| r.n == n).collect();
            let clean: Vec<&&ScalingRow> =
                mine.iter().filter(|r| r.deamortized_rehashes == 0).collect();
            ScalingSummary {
                n,
                total_slots: p.total_slots(),
                queue_threshold: p.queue_threshold(),
                expected_full_load_utilization: p.full_load_utilization(),
                deamortized_max_moves: mine.iter().map(|r| r.deamortized_max_moves).max().unwrap_or(0),
                deamortized_min_of_max_moves: mine
                    .iter()
                    .map(|r| r.deamortized_max_moves)
                    .min()
                    .unwrap_or(0),
                baseline_max_moves: mine.iter().map(|r| r.baseline_max_moves).max().unwrap_or(0),
                baseline_mean_max_moves: if mine.is_empty() {
                    0.0
                } else {
                    mine.iter().map(|r| f64::from(r.baseline_max_moves)).sum::<f64>()
                        / mine.len() as f64
                },
                zero_rehash_trials: clean.len() as u64,
                max_clean_queue_len: clean
                    .iter()
                    .map(|r| r.deamortized_max_queue_len)
                    .max()
                    .unwrap_or(0),
            }
        })
        .collect();

    let smallest = cfg.n_list.iter().min().copied();
    let largest = cfg.n_list.iter().max().copied();
    let baseline_growth_seeds = match (smallest, largest) {
        (Some(lo), Some(hi)) if lo != hi => (0..cfg.seeds)
            .filter(|&s| {
                let at = |n: usize| {
                    rows.iter()
                        .find(|r| r.n == n && r.seed_index == s)
                        .map(|r| r.baseline_max_moves)
                };
                at(hi) > at(lo)
            })
            .count() as u64,
        _ => 0,
    };

    Ok(ScalingReport {
        config: cfg.clone(),
        move_budget,
        queue_constant,
        rows,
        summary,
        baseline_growth_seeds,
    })
}
