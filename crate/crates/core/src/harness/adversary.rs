//! Timing-guided replay: a model of an attacker who can observe the cost of
//! each operation.
//!
//! The attacker watches a pilot run, picks the keys whose insertion was most
//! expensive, and then deletes and re-inserts them, hoping to trigger the same
//! long eviction paths again. Cost is observed as the logical move count, a
//! deterministic stand-in for the operation's duration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::{Parameters, DEFAULT_EPSILON};
use crate::harness::trial::{run_trial_with, CostTrace, Implementation, TrialOptions};
use crate::harness::workload::{KeyDistribution, Op, WorkloadSpec};
use crate::harness::{calibrated, HarnessError};
use crate::hashing::HashSeed;

/// Keys whose pilot cost is at least this quantile of all pilot costs are replayed.
pub const DEFAULT_TOP_QUANTILE: f64 = 0.9;

/// Builds the replay workload: the pilot's operations, followed by a delete and
/// re-insert of every top-cost key, most expensive first (ties keep pilot order).
pub fn adversarial_replay(
    pilot: &WorkloadSpec,
    trace: Option<&CostTrace>,
    quantile: f64,
) -> Result<WorkloadSpec, HarnessError> {
    let trace = trace.ok_or(HarnessError::MissingPilotTrace)?;
    pilot.validate()?;
    let mut ops: Vec<Op> = pilot.ops().collect();
    let attack_start = ops.len() as u64;

    let mut sorted: Vec<u32> = trace.costs.iter().map(|c| c.moves).collect();
    sorted.sort_unstable();
    if let Some(last) = sorted.len().checked_sub(1) {
        let q = quantile.clamp(0.0, 1.0);
        let threshold = sorted[(q * last as f64).floor() as usize];
        let mut chosen: Vec<_> = trace.costs.iter().filter(|c| c.moves >= threshold).collect();
        chosen.sort_by_key(|c| std::cmp::Reverse(c.moves));
        for c in chosen {
            ops.push(Op::Delete { key: c.key });
            ops.push(Op::Insert {
                key: c.key,
                value: c.value,
            });
        }
    }

    Ok(WorkloadSpec {
        n_ops: ops.len() as u64,
        op_mix: pilot.op_mix,
        key_distribution: KeyDistribution::AdversarialReplay,
        key_space: None,
        rng_seed: pilot.rng_seed,
        dictionary_params: pilot.dictionary_params,
        replay: ops,
        attack_start: Some(attack_start),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub capacity: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub move_budget: Option<u32>,
    #[serde(default)]
    pub queue_constant: Option<f64>,
    pub seeds: u64,
    #[serde(default = "default_quantile")]
    pub quantile: f64,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_quantile() -> f64 {
    DEFAULT_TOP_QUANTILE
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryRow {
    pub seed_index: u64,
    pub implementation: Implementation,
    pub replayed_keys: u64,
    pub pilot_max_moves: u32,
    /// Over the whole replay run, pilot prefix included.
    pub replay_max_moves: u32,
    /// Over the delete/re-insert phase only.
    pub attack_max_moves: u32,
    pub pilot_rehashes: u64,
    pub replay_rehashes: u64,
    pub oracle_mismatches: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversarySummary {
    pub implementation: Implementation,
    pub seeds: u64,
    pub replay_ge_pilot: u64,
    pub attack_ge_pilot: u64,
    pub max_replay_moves: u32,
    pub max_attack_moves: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryReport {
    pub config: AdversaryConfig,
    pub move_budget: u32,
    pub rows: Vec<AdversaryRow>,
    pub summary: Vec<AdversarySummary>,
}

impl AdversaryReport {
    pub fn summary_for(&self, imp: Implementation) -> &AdversarySummary {
        self.summary
            .iter()
            .find(|s| s.implementation == imp)
            .expect("both implementations are summarized")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "seed_index,implementation,replayed_keys,pilot_max_moves,replay_max_moves,\
             attack_max_moves,pilot_rehashes,replay_rehashes,oracle_mismatches\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.seed_index,
                r.implementation.as_str(),
                r.replayed_keys,
                r.pilot_max_moves,
                r.replay_max_moves,
                r.attack_max_moves,
                r.pilot_rehashes,
                r.replay_rehashes,
                r.oracle_mismatches
            ));
        }
        out
    }
}

fn attack_one(
    params: Parameters,
    seed_index: u64,
    imp: Implementation,
    quantile: f64,
) -> Result<AdversaryRow, HarnessError> {
    let pilot = WorkloadSpec::fill(params, seed_index);
    let record = TrialOptions {
        record_costs: true,
        ..TrialOptions::default()
    };
    let (pilot_out, trace) = run_trial_with(&pilot, imp, &record)?;
    let replay = adversarial_replay(&pilot, Some(&trace), quantile)?;
    let (replay_out, _) = run_trial_with(&replay, imp, &TrialOptions::default())?;
    Ok(AdversaryRow {
        seed_index,
        implementation: imp,
        replayed_keys: (replay.n_ops - pilot.n_ops) / 2,
        pilot_max_moves: pilot_out.stats.insert.max_moves,
        replay_max_moves: replay_out.stats.insert.max_moves,
        attack_max_moves: replay_out.attack_max_moves.unwrap_or(0),
        pilot_rehashes: pilot_out.stats.rehash_count,
        replay_rehashes: replay_out.stats.rehash_count,
        oracle_mismatches: pilot_out.oracle_mismatches + replay_out.oracle_mismatches,
    })
}

/// Pilot fill, then replay, for every seed and both implementations.
pub fn adversary_experiment(
    cfg: &AdversaryConfig,
    base_seed: HashSeed,
) -> Result<AdversaryReport, HarnessError> {
    let defaults = calibrated();
    let move_budget = cfg.move_budget.unwrap_or(defaults.move_budget);
    let queue_constant = cfg.queue_constant.unwrap_or(defaults.queue_constant);
    let jobs: Vec<(u64, Implementation)> = (0..cfg.seeds)
        .flat_map(|s| Implementation::BOTH.into_iter().map(move |imp| (s, imp)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, imp)| {
            let params = Parameters::new(cfg.capacity, cfg.epsilon)
                .with_move_budget(move_budget)
                .with_queue_constant(queue_constant)
                .with_seed(base_seed.for_trial(s));
            attack_one(params, s, imp, cfg.quantile)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let summary = Implementation::BOTH
        .into_iter()
        .map(|imp| {
            let mine: Vec<&AdversaryRow> = rows.iter().filter(|r| r.implementation == imp).collect();
            AdversarySummary {
                implementation: imp,
                seeds: mine.len() as u64,
                replay_ge_pilot: mine
                    .iter()
                    .filter(|r| r.replay_max_moves >= r.pilot_max_moves)
                    .count() as u64,
                attack_ge_pilot: mine
                    .iter()
                    .filter(|r| r.attack_max_moves >= r.pilot_max_moves)
                    .count() as u64,
                max_replay_moves: mine.iter().map(|r| r.replay_max_moves).max().unwrap_or(0),
                max_attack_moves: mine.iter().map(|r| r.attack_max_moves).max().unwrap_or(0),
            }
        })
        .collect();
    Ok(AdversaryReport {
        config: cfg.clone(),
        move_budget,
        rows,
        summary,
    })
}
