//! Invariant suite on tiny instances, for quick sanity checks of a build.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dictionary::{
    insert_probe_bound, CuckooDict, Outcome, Parameters, DELETE_PROBES, LOOKUP_PROBES,
};
use crate::harness::oracle::ReferenceDict;
use crate::harness::trial::{run_trial, Implementation};
use crate::harness::workload::{OpMix, WorkloadSpec};
use crate::hashing::HashSeed;
use crate::snapshot::DictSnapshot;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(), String>) -> CheckResult {
    match f() {
        Ok(()) => CheckResult {
            name,
            passed: true,
            detail: String::new(),
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

fn random_walk(params: Parameters, steps: u64, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = CuckooDict::new(params).map_err(|e| e.to_string())?;
    let mut oracle = ReferenceDict::new(params.capacity);
    let universe = 2 * params.capacity as u64;
    let l = params.move_budget;
    for step in 0..steps {
        let key = rng.random_range(0..universe);
        let before = d.len();
        match rng.random_range(0..3) {
            0 => {
                let value = rng.random();
                let r = d.insert(key, value).map_err(|e| e.to_string())?;
                let existed = oracle.get(key).is_some();
                oracle.insert(key, value);
                if r.outcome != Outcome::RehashPerformed
                    && (r.metrics.move_count > l || r.metrics.probe_count > insert_probe_bound(l))
                {
                    return Err(format!("step {step}: insert over budget {:?}", r.metrics));
                }
                let expected = if existed || r.outcome == Outcome::Full { before } else { before + 1 };
                if d.len() != expected {
                    return Err(format!("step {step}: count {} expected {expected}", d.len()));
                }
            }
            1 => {
                let r = d.lookup(key);
                if r.value != oracle.get(key) || r.metrics.probe_count != LOOKUP_PROBES {
                    return Err(format!("step {step}: lookup of {key} disagrees"));
                }
            }
            _ => {
                let r = d.delete(key);
                let found = oracle.remove(key);
                if (r.outcome == Outcome::Ok) != found || r.metrics.probe_count != DELETE_PROBES {
                    return Err(format!("step {step}: delete of {key} disagrees"));
                }
            }
        }
        d.check_invariants().map_err(|e| format!("step {step}: {e}"))?;
    }
    Ok(())
}

/// Runs every check and returns their results; nothing panics.
pub fn run_selftest() -> Vec<CheckResult> {
    let base = HashSeed::new(0x5e1f_7e57);
    let mut results = vec![
        check("tiny random walks keep every invariant", || {
            for (i, (n, l)) in [(1usize, 1u32), (2, 1), (4, 2), (8, 3), (32, 3), (64, 1)]
                .into_iter()
                .enumerate()
            {
                let p = Parameters::new(n, 0.5)
                    .with_move_budget(l)
                    .with_queue_constant(2.0)
                    .with_seed(base.for_trial(i as u64));
                random_walk(p, 2_000, i as u64)?;
            }
            Ok(())
        }),
        check("lockstep trials match the oracle", || {
            for imp in Implementation::BOTH {
                let w = WorkloadSpec::new(
                    5_000,
                    OpMix::new(50, 40, 10),
                    3,
                    Parameters::new(128, 0.1).with_seed(base),
                );
                let o = run_trial(&w, imp).map_err(|e| e.to_string())?;
                if !o.passed() {
                    return Err(format!("{imp:?}: {o:?}"));
                }
            }
            Ok(())
        }),
        check("rehash preserves the element set", || {
            let mut d = CuckooDict::new(Parameters::new(200, 0.2).with_seed(base))
                .map_err(|e| e.to_string())?;
            for k in 0..200u64 {
                d.insert(k * 31, k).map_err(|e| e.to_string())?;
            }
            let mut before: Vec<_> = d.iter().collect();
            d.full_rehash().map_err(|e| e.to_string())?;
            let mut after: Vec<_> = d.iter().collect();
            before.sort_unstable();
            after.sort_unstable();
            if before != after {
                return Err("element set changed".into());
            }
            d.check_invariants()
        }),
        check("metrics switch does not change state", || {
            let p = Parameters::new(300, 0.1).with_seed(base);
            let mut on = CuckooDict::new(p).map_err(|e| e.to_string())?;
            let mut off = on.clone();
            off.set_metrics_enabled(false);
            for k in 0..300u64 {
                on.insert(k, k).map_err(|e| e.to_string())?;
                off.insert(k, k).map_err(|e| e.to_string())?;
            }
            if DictSnapshot::capture(&on) != DictSnapshot::capture(&off) {
                return Err("snapshots differ".into());
            }
            Ok(())
        }),
    ];
    results.shrink_to_fit();
    results
}
