use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn deamort(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deamort"))
        .current_dir(dir)
        .env_remove("DEAMORT_SEED")
        .env_remove("DEAMORT_FAULT_INJECT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const SCALING: &str = r#"
schema_version = 1
hash_seed = "0xabc"

[scaling]
n_list = [256, 1024]
seeds = 3
"#;

const TRIAL: &str = r#"{
  "schema_version": 1,
  "trial": {
    "seeds": 2,
    "workload": {
      "n_ops": 20000,
      "op_mix": {"insert": 50, "lookup": 40, "delete": 10},
      "key_distribution": "uniform_random",
      "rng_seed": 4,
      "dictionary_params": {"capacity": 1024, "epsilon": 0.1}
    }
  }
}"#;

fn without_timestamp(manifest: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(manifest).unwrap();
    v.as_object_mut().unwrap().remove("timestamp").expect("timestamp key");
    v
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = deamort(dir.path(), &["selftest"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn scaling_writes_reports_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "s.toml", SCALING);
    let out = deamort(dir.path(), &["--config", "s.toml", "--out", "o", "scaling"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    for f in ["scaling.csv", "scaling.json", "manifest.json"] {
        assert!(o.join(f).is_file(), "{f} missing");
    }
    let csv = fs::read_to_string(o.join("scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(o.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "scaling");
    assert_eq!(manifest["hash_seed"], format!("{:032x}", 0xabc));
}

#[test]
fn repeated_runs_are_identical_and_do_not_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "s.toml", SCALING);
    for _ in 0..2 {
        let out = deamort(dir.path(), &["--config", "s.toml", "--out", "o", "scaling"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let o = dir.path().join("o");
    for (a, b) in [("scaling.csv", "scaling-1.csv"), ("scaling.json", "scaling-1.json")] {
        assert_eq!(fs::read(o.join(a)).unwrap(), fs::read(o.join(b)).unwrap(), "{a}");
    }
    let m0 = without_timestamp(&fs::read_to_string(o.join("manifest.json")).unwrap());
    let m1 = without_timestamp(&fs::read_to_string(o.join("manifest-1.json")).unwrap());
    assert_eq!(m0["config"], m1["config"]);
    assert_eq!(m0["hash_seed"], m1["hash_seed"]);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "s.toml", SCALING);
    let out = deamort(
        dir.path(),
        &["--config", "s.toml", "--out", "o", "--seed", "ff", "--format", "json", "scaling"],
    );
    assert_eq!(out.status.code(), Some(0));
    let o = dir.path().join("o");
    assert!(!o.join("scaling.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(o.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["hash_seed"], format!("{:032x}", 0xff));
}

#[test]
fn trial_succeeds_and_writes_histograms() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "t.json", TRIAL);
    let out = deamort(dir.path(), &["--config", "t.json", "--out", "o", "trial"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    for f in ["trial.csv", "trial.json", "deamortized_moves.csv", "amortized_baseline_probes.csv"] {
        assert!(o.join(f).is_file(), "{f} missing");
    }
    let hist = fs::read_to_string(o.join("deamortized_moves.csv")).unwrap();
    assert!(hist.starts_with("op_type,bucket,count\n"));
}

#[cfg(debug_assertions)]
#[test]
fn injected_fault_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "t.json", TRIAL);
    let out = Command::new(env!("CARGO_BIN_EXE_deamort"))
        .current_dir(dir.path())
        .env("DEAMORT_FAULT_INJECT", "oracle")
        .args(["--config", "t.json", "--out", "o", "trial"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "s.toml", SCALING);
    let cases: [&[&str]; 5] = [
        &["trial"],
        &["--config", "missing.toml", "scaling"],
        &["--config", "s.toml", "trial"],
        &["--config", "s.toml", "--seed", "xyz", "scaling"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = deamort(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}
