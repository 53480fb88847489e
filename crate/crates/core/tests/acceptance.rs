//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails. Thresholds are fixed here and must not be relaxed.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use deamort::dictionary::insert_probe_bound;
use deamort::harness::adversary::DEFAULT_TOP_QUANTILE;
use deamort::harness::{
    adversary_experiment, calibrated, run_trial, scaling_experiment, AdversaryConfig,
    Implementation, OpMix, ScalingConfig, ScalingReport, TrialOutcome, WorkloadSpec,
};
use deamort::{HashSeed, Parameters};
use rayon::prelude::*;

const BASE_SEED: HashSeed = HashSeed::new(0x00c0_ffee);
const SCALING_N: [usize; 5] = [1 << 10, 1 << 12, 1 << 14, 1 << 16, 1 << 18];
const CAP_FILL_N: [usize; 3] = [1 << 12, 1 << 14, 1 << 16];

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn mixed_trials() -> Vec<TrialOutcome> {
    let jobs: Vec<(u64, Implementation)> = (0..20)
        .flat_map(|s| Implementation::BOTH.into_iter().map(move |imp| (s, imp)))
        .collect();
    jobs.par_iter()
        .map(|&(s, imp)| {
            let params = Parameters::new(1 << 16, 0.1).with_seed(BASE_SEED.for_trial(s));
            let w = WorkloadSpec::new(1_000_000, OpMix::new(50, 40, 10), s, params);
            run_trial(&w, imp).expect("trial runs")
        })
        .collect()
}

fn oracle_equivalence(trials: &[TrialOutcome]) -> Verdict {
    let mismatches: u64 = trials.iter().map(|t| t.oracle_mismatches).sum();
    let failures: u64 = trials.iter().map(|t| t.rehash_failures).sum();
    let ops: u64 = trials.iter().map(|t| t.stats.total_ops()).sum();
    verdict(
        mismatches == 0 && failures == 0 && trials.len() == 40 && ops == 40_000_000,
        format!("{} trials, {ops} ops, {mismatches} mismatches, {failures} failed rehashes", trials.len()),
    )
}

fn hard_cap(trials: &[TrialOutcome], scaling: &ScalingReport) -> Verdict {
    let l = calibrated().move_budget;
    let mut violations = 0u64;
    let mut worst_moves = 0u32;
    let mut worst_probes = 0u32;
    for t in trials.iter().filter(|t| t.implementation == Implementation::Deamortized) {
        violations += t.cap_violations;
        worst_moves = worst_moves.max(t.max_moves_without_rehash);
        for op in [&t.stats.lookup, &t.stats.delete] {
            worst_probes = worst_probes.max(op.max_probes);
        }
    }
    let mut fills = 0;
    for &n in &CAP_FILL_N {
        for r in scaling.rows_for(n) {
            fills += 1;
            violations += r.deamortized_cap_violations;
            worst_moves = worst_moves.max(r.deamortized_max_moves);
        }
    }
    verdict(
        violations == 0 && worst_moves <= l && fills == 300,
        format!(
            "L={l}, probe cap {}, {violations} violations, worst non-rehash moves {worst_moves}, \
             worst lookup/delete probes {worst_probes}, {fills} fill runs",
            insert_probe_bound(l)
        ),
    )
}

fn utilization() -> Verdict {
    let mut ok = true;
    let mut lines = Vec::new();
    let cases: Vec<(usize, f64)> = [10usize, 1 << 10, 1 << 14]
        .into_iter()
        .map(|n| (n, 0.1))
        .chain(CAP_FILL_N.into_iter().map(|n| (n, 0.02)))
        .collect();
    for (n, eps) in cases {
        for imp in Implementation::BOTH {
            let params = Parameters::new(n, eps).with_seed(BASE_SEED.for_trial(n as u64));
            let t = run_trial(&WorkloadSpec::fill(params, 0), imp).expect("fill runs");
            let u = t.final_utilization;
            let this_ok = t.final_count == n
                && t.rehash_failures == 0
                && t.oracle_mismatches == 0
                && if eps == 0.1 {
                    (u - 1.0 / 2.2).abs() <= 1.0 / params.total_slots() as f64
                } else {
                    u >= 0.49
                };
            ok &= this_ok;
            if !this_ok || imp == Implementation::Deamortized {
                lines.push(format!("eps={eps} n={n} {}={u:.5}", imp.as_str()));
            }
        }
    }
    verdict(ok, lines.join(", "))
}

fn contrast(scaling: &ScalingReport) -> Verdict {
    let l = scaling.move_budget;
    let off_l = scaling
        .rows
        .iter()
        .filter(|r| r.deamortized_max_moves != l)
        .count();
    verdict(
        scaling.baseline_growth_seeds >= 90 && off_l == 0,
        format!(
            "baseline max grew 2^10 -> 2^18 in {}/100 seeds; de-amortized max != L={l} in {off_l} rows",
            scaling.baseline_growth_seeds
        ),
    )
}

fn queue_health(scaling: &ScalingReport) -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in &scaling.summary {
        let clean_ok = s.max_clean_queue_len as usize <= s.queue_threshold;
        ok &= s.zero_rehash_trials >= 95 && clean_ok;
        parts.push(format!(
            "n={} {}/100 clean, max queue {}/{}",
            s.n, s.zero_rehash_trials, s.max_clean_queue_len, s.queue_threshold
        ));
    }
    verdict(
        ok,
        format!("L={} C={}: {}", scaling.move_budget, scaling.queue_constant, parts.join("; ")),
    )
}

fn adversary() -> Verdict {
    let cfg = AdversaryConfig {
        capacity: 1 << 14,
        epsilon: 0.1,
        move_budget: None,
        queue_constant: None,
        seeds: 100,
        quantile: DEFAULT_TOP_QUANTILE,
    };
    let r = adversary_experiment(&cfg, BASE_SEED).expect("adversary runs");
    let de = r.summary_for(Implementation::Deamortized);
    let base = r.summary_for(Implementation::AmortizedBaseline);
    let mismatches: u64 = r.rows.iter().map(|x| x.oracle_mismatches).sum();
    verdict(
        de.max_replay_moves <= r.move_budget && base.attack_ge_pilot > 50 && mismatches == 0,
        format!(
            "de-amortized max under replay {} (L={}); baseline attack-phase max >= pilot max in {}/100 seeds \
             (whole replay: {}/100)",
            de.max_replay_moves, r.move_budget, base.attack_ge_pilot, base.replay_ge_pilot
        ),
    )
}

fn determinism() -> Verdict {
    let scaling = ScalingConfig {
        n_list: vec![1 << 10, 1 << 12],
        seeds: 8,
        epsilon: 0.1,
        move_budget: None,
        queue_constant: None,
    };
    let adv = AdversaryConfig {
        capacity: 1 << 12,
        epsilon: 0.1,
        move_budget: None,
        queue_constant: None,
        seeds: 4,
        quantile: DEFAULT_TOP_QUANTILE,
    };
    let render = || {
        let s = scaling_experiment(&scaling, BASE_SEED).unwrap();
        let a = adversary_experiment(&adv, BASE_SEED).unwrap();
        let params = Parameters::new(4096, 0.1).with_seed(BASE_SEED);
        let t = run_trial(&WorkloadSpec::new(50_000, OpMix::new(50, 40, 10), 1, params), Implementation::Deamortized)
            .unwrap();
        [
            serde_json::to_string_pretty(&s).unwrap(),
            s.to_csv(),
            serde_json::to_string_pretty(&a).unwrap(),
            a.to_csv(),
            t.stats.export().to_json(),
        ]
    };
    let (first, second) = (render(), render());
    let same = first.iter().zip(&second).filter(|(a, b)| a == b).count();
    verdict(
        same == first.len(),
        format!("{same}/{} reports byte-identical across runs", first.len()),
    )
}

fn queue_model() -> Verdict {
    let ops = 200_000;
    match common::queue_model_run(ops, 32, 0xacce) {
        Ok(()) => verdict(true, format!("{ops} ops matched the model")),
        Err(e) => verdict(false, e),
    }
}

fn main() -> ExitCode {
    let started = Instant::now();
    let scaling = scaling_experiment(
        &ScalingConfig {
            n_list: SCALING_N.to_vec(),
            seeds: 100,
            epsilon: 0.1,
            move_budget: None,
            queue_constant: None,
        },
        BASE_SEED,
    )
    .expect("scaling runs");
    let trials = mixed_trials();

    let results = [
        ("1 oracle equivalence", oracle_equivalence(&trials)),
        ("2 hard worst-case cap", hard_cap(&trials, &scaling)),
        ("3 utilization", utilization()),
        ("4 de-amortization contrast", contrast(&scaling)),
        ("5 queue health", queue_health(&scaling)),
        ("6 clocked adversary", adversary()),
        ("7 determinism", determinism()),
        ("8 queue model", queue_model()),
    ];
    let mut failed = 0;
    for (name, v) in &results {
        println!("{} criterion {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        failed += usize::from(!v.passed);
    }
    println!(
        "acceptance: {}/{} passed in {:.0?}",
        results.len() - failed,
        results.len(),
        started.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
