//! Lockstep execution of a workload against an implementation and the oracle.

use serde::{Deserialize, Serialize};

use crate::dictionary::{insert_probe_bound, CuckooDict, DictError, OpResult, Outcome};
use crate::harness::oracle::{InsertClass, ReferenceDict};
use crate::harness::workload::{Op, WorkloadSpec};
use crate::harness::HarnessError;
use crate::metrics::{AggregateStats, OpMetrics, OpType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Implementation {
    Deamortized,
    AmortizedBaseline,
}

impl Implementation {
    pub const BOTH: [Implementation; 2] =
        [Implementation::Deamortized, Implementation::AmortizedBaseline];

    pub fn as_str(self) -> &'static str {
        match self {
            Implementation::Deamortized => "deamortized",
            Implementation::AmortizedBaseline => "amortized_baseline",
        }
    }

    fn insert(self, dict: &mut CuckooDict, key: u64, value: u64) -> Result<OpResult, DictError> {
        match self {
            Implementation::Deamortized => dict.insert(key, value),
            Implementation::AmortizedBaseline => dict.insert_amortized(key, value),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrialOptions {
    /// Record the cost of every new-key insert, for adversarial replay.
    pub record_costs: bool,
    /// Stop at the first rehash (calibration only needs to know whether one happens).
    pub stop_at_rehash: bool,
    /// Corrupt the oracle on every 97th insert. Used to test mismatch reporting.
    pub inject_oracle_fault: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyCost {
    pub key: u64,
    pub value: u64,
    pub moves: u32,
}

/// Per-key insertion costs observed in a pilot run, in insertion order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostTrace {
    pub costs: Vec<KeyCost>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub implementation: Implementation,
    pub stats: AggregateStats,
    pub oracle_mismatches: u64,
    pub final_count: usize,
    pub final_utilization: f64,
    pub full_events: u64,
    /// Operations whose outcome was `RehashPerformed`.
    pub rehash_events: u64,
    /// Inserts rejected with `RehashFailed`.
    pub rehash_failures: u64,
    /// Largest move count among operations that did not rehash.
    pub max_moves_without_rehash: u32,
    /// Non-rehashing de-amortized operations over the move or probe cap.
    pub cap_violations: u64,
    /// Largest move count from `attack_start` on, when the workload marks one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack_max_moves: Option<u32>,
    pub stopped_early: bool,
}

impl TrialOutcome {
    fn empty(implementation: Implementation, trace_every: u64) -> Self {
        TrialOutcome {
            implementation,
            stats: AggregateStats::with_trace_every(trace_every),
            oracle_mismatches: 0,
            final_count: 0,
            final_utilization: 0.0,
            full_events: 0,
            rehash_events: 0,
            rehash_failures: 0,
            max_moves_without_rehash: 0,
            cap_violations: 0,
            attack_max_moves: None,
            stopped_early: false,
        }
    }

    pub fn passed(&self) -> bool {
        self.oracle_mismatches == 0 && self.rehash_failures == 0 && self.cap_violations == 0
    }
}

pub fn run_trial(w: &WorkloadSpec, imp: Implementation) -> Result<TrialOutcome, HarnessError> {
    run_trial_with(w, imp, &TrialOptions::default()).map(|(o, _)| o)
}

/// Runs `w` and the oracle side by side, comparing every observable result.
pub fn run_trial_with(
    w: &WorkloadSpec,
    imp: Implementation,
    opts: &TrialOptions,
) -> Result<(TrialOutcome, CostTrace), HarnessError> {
    w.validate()?;
    let params = w.dictionary_params;
    let mut dict = CuckooDict::new(params)?;
    let mut oracle = ReferenceDict::new(params.capacity);
    let mut out = TrialOutcome::empty(imp, crate::metrics::DEFAULT_TRACE_EVERY);
    let mut trace = CostTrace::default();
    let probe_cap = insert_probe_bound(params.move_budget);
    let attack_start = w.attack_start;
    let mut inserts = 0u64;

    for (i, op) in w.ops().enumerate() {
        let in_attack = attack_start.is_some_and(|s| i as u64 >= s);
        let (op_type, metrics, rehashed) = match op {
            Op::Insert { key, value } => {
                inserts += 1;
                let was_present = oracle.get(key).is_some();
                match imp.insert(&mut dict, key, value) {
                    Ok(r) => {
                        let class = match r.outcome {
                            Outcome::Full => InsertClass::Full,
                            _ => InsertClass::Stored,
                        };
                        let faulty = opts.inject_oracle_fault && inserts.is_multiple_of(97);
                        let expected = if faulty {
                            InsertClass::Stored
                        } else {
                            oracle.insert(key, value)
                        };
                        if class != expected {
                            out.oracle_mismatches += 1;
                        }
                        match r.outcome {
                            Outcome::Full => out.full_events += 1,
                            Outcome::RehashPerformed => out.rehash_events += 1,
                            _ => {}
                        }
                        if opts.record_costs && !was_present && class == InsertClass::Stored {
                            trace.costs.push(KeyCost {
                                key,
                                value,
                                moves: r.metrics.move_count,
                            });
                        }
                        let rehashed = r.outcome == Outcome::RehashPerformed;
                        if imp == Implementation::Deamortized
                            && !rehashed
                            && (r.metrics.move_count > params.move_budget
                                || r.metrics.probe_count > probe_cap)
                        {
                            out.cap_violations += 1;
                        }
                        (OpType::Insert, r.metrics, rehashed)
                    }
                    Err(DictError::RehashFailed { .. }) => {
                        out.rehash_failures += 1;
                        (OpType::Insert, OpMetrics::default(), true)
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            Op::Lookup { key } => {
                let r = dict.lookup(key);
                if r.value != oracle.get(key) {
                    out.oracle_mismatches += 1;
                }
                if r.metrics.probe_count > crate::dictionary::LOOKUP_PROBES {
                    out.cap_violations += 1;
                }
                (OpType::Lookup, r.metrics, false)
            }
            Op::Delete { key } => {
                let r = dict.delete(key);
                let found = r.outcome == Outcome::Ok;
                if found != oracle.remove(key) {
                    out.oracle_mismatches += 1;
                }
                if r.metrics.probe_count > crate::dictionary::DELETE_PROBES {
                    out.cap_violations += 1;
                }
                (OpType::Delete, r.metrics, false)
            }
        };
        out.stats.record(op_type, &metrics);
        if rehashed {
            out.stats.record_rehash();
        } else {
            out.max_moves_without_rehash = out.max_moves_without_rehash.max(metrics.move_count);
        }
        if in_attack {
            let m = out.attack_max_moves.get_or_insert(0);
            *m = (*m).max(metrics.move_count);
        }
        if rehashed && opts.stop_at_rehash {
            out.stopped_early = true;
            break;
        }
    }

    if !out.stopped_early {
        // Final sweep: the two maps must agree exactly.
        if dict.len() != oracle.len() {
            out.oracle_mismatches += 1;
        }
        for (k, v) in oracle.iter() {
            if dict.get(k) != Some(v) {
                out.oracle_mismatches += 1;
            }
        }
    }
    out.final_count = dict.len();
    out.final_utilization = dict.snapshot_stats().utilization;
    Ok((out, trace))
}
