use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use deamort::harness::config::{ConfigError, Manifest, RunConfig, TrialConfig, CONFIG_SCHEMA_VERSION};
use deamort::harness::selftest::run_selftest;
use deamort::harness::{
    adversary_experiment, calibrate, run_trial_with, scaling_experiment, HarnessError,
    Implementation, TrialOptions, TrialOutcome,
};
use deamort::metrics::Metric;
use deamort::{AggregateStats, HashSeed};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::OutputSet;
use crate::{Cli, Command};

pub enum Status {
    Success,
    Failed(String),
}

/// Fault injection for exercising the mismatch exit path; debug builds only.
fn inject_fault() -> bool {
    cfg!(debug_assertions)
        && std::env::var("DEAMORT_FAULT_INJECT").is_ok_and(|v| v == "oracle")
}

fn resolve_seed(cli: &Cli, cfg: &RunConfig) -> Result<HashSeed> {
    if let Some(hex) = &cli.seed_override {
        return HashSeed::from_hex(hex).map_err(|e| anyhow!("--seed: {e}"));
    }
    if let Ok(hex) = std::env::var("DEAMORT_SEED") {
        if !hex.trim().is_empty() {
            return HashSeed::from_hex(&hex).map_err(|e| anyhow!("DEAMORT_SEED: {e}"));
        }
    }
    Ok(cfg.seed()?)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

/// Harness errors caused by the input are configuration errors; the rest are failures.
fn classify(err: HarnessError) -> Result<Status> {
    match err {
        HarnessError::OracleMismatch(n) => Ok(Status::Failed(format!("{n} oracle mismatches"))),
        other => Err(other.into()),
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    if cli.command == Command::Selftest {
        return Ok(selftest());
    }
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| anyhow!("`{}` needs --config PATH", cli.command.name()))?;
    let mut cfg = RunConfig::load(path)?;
    let seed = resolve_seed(cli, &cfg)?;
    cfg.hash_seed = Some(seed.to_hex());

    let outcome = match cli.command {
        Command::Trial => trial(cli, &cfg, seed),
        Command::Calibrate => calibration(cli, &cfg, seed),
        Command::Scaling => scaling(cli, &cfg, seed),
        Command::Adversary => adversary(cli, &cfg, seed),
        Command::Selftest => unreachable!(),
    }?;
    let (mut out, status) = match outcome {
        Ok(pair) => pair,
        Err(status) => return Ok(status),
    };
    let manifest = Manifest {
        schema_version: CONFIG_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: cli.command.name().to_string(),
        hash_seed: seed.to_hex(),
        config: cfg,
        outputs: out.written().to_vec(),
        timestamp: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default(),
    };
    let name = out.manifest_name();
    out.write("manifest.json", &to_json(&manifest))?;
    eprintln!("wrote {} files to {} ({name})", out.written().len(), out.dir().display());
    Ok(status)
}

type Produced = std::result::Result<(OutputSet, Status), Status>;

fn selftest() -> Status {
    let results = run_selftest();
    let mut failed = Vec::new();
    for r in &results {
        if r.passed {
            println!("PASS {}", r.name);
        } else {
            println!("FAIL {}: {}", r.name, r.detail);
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        Status::Success
    } else {
        Status::Failed(format!("selftest failed: {}", failed.join(", ")))
    }
}

#[derive(Serialize)]
struct TrialRun<'a> {
    seed_index: u64,
    outcome: &'a TrialOutcome,
}

#[derive(Serialize)]
struct TrialReport<'a> {
    config: &'a TrialConfig,
    runs: Vec<TrialRun<'a>>,
    merged: Vec<(Implementation, AggregateStats)>,
}

fn trial(cli: &Cli, cfg: &RunConfig, seed: HashSeed) -> Result<Produced> {
    let tc = cfg
        .trial
        .as_ref()
        .ok_or(ConfigError::MissingSection("trial"))?;
    tc.workload.validate()?;
    let jobs: Vec<(Implementation, u64)> = tc
        .implementations
        .iter()
        .flat_map(|&imp| (0..tc.seeds).map(move |s| (imp, s)))
        .collect();
    let opts = TrialOptions {
        inject_oracle_fault: inject_fault(),
        ..TrialOptions::default()
    };
    let results = jobs
        .par_iter()
        .map(|&(imp, s)| {
            let mut w = tc.workload.clone();
            w.rng_seed = w.rng_seed.wrapping_add(s);
            w.dictionary_params.seed = seed.for_trial(s);
            run_trial_with(&w, imp, &opts).map(|(o, _)| o)
        })
        .collect::<std::result::Result<Vec<_>, _>>();
    let outcomes = match results {
        Ok(o) => o,
        Err(e) => return classify(e).map(Err),
    };

    let mut merged = Vec::new();
    for &imp in &tc.implementations {
        let stats = outcomes
            .iter()
            .filter(|o| o.implementation == imp)
            .fold(AggregateStats::default(), |acc, o| acc.merge(&o.stats));
        merged.push((imp, stats));
    }

    let mut names = vec![];
    if cli.format.csv() {
        names.push("trial.csv".to_string());
        for (imp, _) in &merged {
            names.push(format!("{}_moves.csv", imp.as_str()));
            names.push(format!("{}_probes.csv", imp.as_str()));
        }
    }
    if cli.format.json() {
        names.push("trial.json".to_string());
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut out = OutputSet::reserve(&cli.output_dir, &refs)?;

    if cli.format.csv() {
        let mut csv = String::from(
            "implementation,seed_index,ops,oracle_mismatches,full_events,rehash_events,\
             rehash_failures,cap_violations,max_moves,max_probes,max_queue_len,final_count,\
             final_utilization\n",
        );
        for (&(imp, s), o) in jobs.iter().zip(&outcomes) {
            let max_probes = [&o.stats.insert, &o.stats.lookup, &o.stats.delete]
                .iter()
                .map(|x| x.max_probes)
                .max()
                .unwrap_or(0);
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                imp.as_str(),
                s,
                o.stats.total_ops(),
                o.oracle_mismatches,
                o.full_events,
                o.rehash_events,
                o.rehash_failures,
                o.cap_violations,
                o.stats.insert.max_moves,
                max_probes,
                o.stats.max_queue_len,
                o.final_count,
                o.final_utilization
            ));
        }
        out.write("trial.csv", &csv)?;
        for (imp, stats) in &merged {
            let report = stats.export();
            out.write(&format!("{}_moves.csv", imp.as_str()), &report.to_csv(Metric::Moves))?;
            out.write(&format!("{}_probes.csv", imp.as_str()), &report.to_csv(Metric::Probes))?;
        }
    }
    if cli.format.json() {
        let report = TrialReport {
            config: tc,
            runs: jobs
                .iter()
                .zip(&outcomes)
                .map(|(&(_, s), o)| TrialRun {
                    seed_index: s,
                    outcome: o,
                })
                .collect(),
            merged,
        };
        out.write("trial.json", &to_json(&report))?;
    }

    let mismatches: u64 = outcomes.iter().map(|o| o.oracle_mismatches).sum();
    let failures: u64 = outcomes.iter().map(|o| o.rehash_failures).sum();
    let status = if mismatches > 0 || failures > 0 {
        Status::Failed(format!(
            "{mismatches} oracle mismatches, {failures} failed rehashes"
        ))
    } else {
        Status::Success
    };
    Ok(Ok((out, status)))
}

fn calibration(cli: &Cli, cfg: &RunConfig, seed: HashSeed) -> Result<Produced> {
    let cc = cfg
        .calibrate
        .as_ref()
        .ok_or(ConfigError::MissingSection("calibrate"))?;
    let report = match calibrate(cc, seed) {
        Ok(r) => r,
        Err(e) => return classify(e).map(Err),
    };
    let mut names = vec![];
    if cli.format.csv() {
        names.push("calibration.csv");
    }
    if cli.format.json() {
        names.push("calibration.json");
    }
    if report.recommended.is_some() {
        names.push("recommended.json");
    }
    let mut out = OutputSet::reserve(&cli.output_dir, &names)?;
    if cli.format.csv() {
        out.write("calibration.csv", &report.to_csv())?;
    }
    if cli.format.json() {
        out.write("calibration.json", &to_json(&report))?;
    }
    match &report.recommended {
        Some(rec) => {
            eprintln!(
                "recommended move_budget={} queue_constant={}",
                rec.move_budget, rec.queue_constant
            );
            out.write("recommended.json", &format!("{}\n", rec.to_json()))?;
        }
        None => eprintln!("no (L, C) pair reached the target zero-rehash fraction"),
    }
    Ok(Ok((out, Status::Success)))
}

fn scaling(cli: &Cli, cfg: &RunConfig, seed: HashSeed) -> Result<Produced> {
    let sc = cfg
        .scaling
        .as_ref()
        .ok_or(ConfigError::MissingSection("scaling"))?;
    let report = match scaling_experiment(sc, seed) {
        Ok(r) => r,
        Err(e) => return classify(e).map(Err),
    };
    let mut names = vec![];
    if cli.format.csv() {
        names.push("scaling.csv");
    }
    if cli.format.json() {
        names.push("scaling.json");
    }
    let mut out = OutputSet::reserve(&cli.output_dir, &names)?;
    if cli.format.csv() {
        out.write("scaling.csv", &report.to_csv())?;
    }
    if cli.format.json() {
        out.write("scaling.json", &to_json(&report))?;
    }
    let mismatches: u64 = report.rows.iter().map(|r| r.oracle_mismatches).sum();
    let failures: u64 = report.rows.iter().map(|r| r.rehash_failures).sum();
    let status = if mismatches > 0 || failures > 0 {
        Status::Failed(format!(
            "{mismatches} oracle mismatches, {failures} failed rehashes"
        ))
    } else {
        Status::Success
    };
    Ok(Ok((out, status)))
}

fn adversary(cli: &Cli, cfg: &RunConfig, seed: HashSeed) -> Result<Produced> {
    let ac = cfg
        .adversary
        .as_ref()
        .ok_or(ConfigError::MissingSection("adversary"))?;
    let report = match adversary_experiment(ac, seed) {
        Ok(r) => r,
        Err(e) => return classify(e).map(Err),
    };
    let mut names = vec![];
    if cli.format.csv() {
        names.push("adversary.csv");
    }
    if cli.format.json() {
        names.push("adversary.json");
    }
    let mut out = OutputSet::reserve(&cli.output_dir, &names)?;
    if cli.format.csv() {
        out.write("adversary.csv", &report.to_csv())?;
    }
    if cli.format.json() {
        out.write("adversary.json", &to_json(&report))?;
    }
    let mismatches: u64 = report.rows.iter().map(|r| r.oracle_mismatches).sum();
    let status = if mismatches > 0 {
        Status::Failed(format!("{mismatches} oracle mismatches"))
    } else {
        Status::Success
    };
    Ok(Ok((out, status)))
}
