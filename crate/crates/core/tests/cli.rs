use std::path::Path;
use std::process::{Command, Output};

use snls_core::ensemble;
use snls_core::pathsim::PathRecord;

fn snls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snls"))
        .args(args)
        .env_remove("SNLS_WORKERS")
        .output()
        .unwrap()
}

fn records(dir: &Path) -> Vec<PathRecord> {
    std::fs::read_to_string(dir.join(ensemble::RECORDS_FILE))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str::<ensemble::PathEntry>(l).unwrap().record)
        .collect()
}

const SMALL: [&str; 6] = ["--n-points", "256", "--dt", "0.005", "--t-end", "0.2"];

#[test]
fn simulate_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "3")] {
        let out = tmp.path().join(run);
        let mut args = vec!["simulate", "--paths", "5", "--seed", "9", "--workers", workers, "--out", out.to_str().unwrap()];
        args.extend(SMALL);
        let o = snls(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let stdout = String::from_utf8_lossy(&o.stdout);
        assert!(stdout.contains("x_norm") && stdout.contains("mass_drift"), "{stdout}");
        bytes.push((
            std::fs::read(out.join(ensemble::RECORDS_FILE)).unwrap(),
            std::fs::read(out.join(ensemble::SUMMARIES_FILE)).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
    let seeds: Vec<u64> = records(&tmp.path().join("a")).iter().map(|r| r.seed).collect();
    assert_eq!(seeds, vec![9, 10, 11, 12, 13]);
}

#[test]
fn untruncated_critical_run_conserves_mass() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = snls(&[
        "simulate", "--epsilon", "0", "--m", "inf", "--amplitude", "0.1", "--paths", "2", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for r in records(&out) {
        assert!(r.completed());
        assert!(r.mass_drift <= 1e-10, "{}", r.mass_drift);
        assert_eq!(r.config.params.m_trunc, f64::INFINITY);
        assert_eq!(r.truncation_onset, None);
    }
}

#[test]
fn replay_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let mut args = vec!["simulate", "--paths", "16", "--out", out.to_str().unwrap()];
    args.extend(SMALL);
    assert!(snls(&args).status.success());

    let o = snls(&["replay", out.to_str().unwrap(), "--workers", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("identical  records.jsonl") && text.contains("identical  summaries.csv"));

    let csv = out.join(ensemble::SUMMARIES_FILE);
    let mut s = std::fs::read_to_string(&csv).unwrap();
    s.push_str("x_norm,9,1,0,16,0\n");
    std::fs::write(&csv, s).unwrap();
    let o = snls(&["replay", out.join(ensemble::MANIFEST_FILE).to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("DIFFERENT  summaries.csv"));
}

#[test]
fn ladder_writes_study_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("eps");
    let mut args = vec!["ladder", "eps", "--paths", "3", "--out", out.to_str().unwrap()];
    args.extend(SMALL);
    let o = snls(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("eps.csv")).unwrap();
    assert!(table.contains("# strictly_decreasing: "));
    assert!(table.lines().any(|l| l == "eps_a,eps_b,value,stderr,n_used,n_aborted"));
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 6);
    assert!(snls(&["replay", out.to_str().unwrap()]).status.success());
}

#[test]
fn exit_codes() {
    assert_eq!(snls(&["ladder", "nope"]).status.code(), Some(2));
    assert_eq!(snls(&["simulate", "--dt", "-1", "--dry-run"]).status.code(), Some(2));
    assert_eq!(snls(&["simulate", "--config", "/nonexistent/cfg.json"]).status.code(), Some(2));
    assert_eq!(snls(&["validate", "--only", "bogus"]).status.code(), Some(2));
    assert_eq!(snls(&["--help"]).status.code(), Some(0));
}

#[test]
fn dry_run_prints_resolved_config() {
    let o = snls(&["simulate", "--dry-run", "--paths", "7", "--sign", "focusing", "--rho", "1,3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_paths"], 7);
    assert_eq!(v["base"]["params"]["sign"], "focusing");
    assert_eq!(v["rho_list"], serde_json::json!([1.0, 3.0]));
}

#[test]
fn validate_json_report() {
    let o = snls(&["validate", "--only", "unitarity,parseval", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
}
