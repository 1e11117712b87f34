use std::path::Path;
use std::process::{Command, Output};

use dpplan_core::harness::{read_batch, read_ledger, read_policies, SimulationConfig};
use dpplan_core::workload::Family;

fn dpplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpplan")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = dpplan(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_batches_and_upc_variant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w2");
    ok(&["generate", "--workload", "W2", "--seed", "3", "--upc", "--out", path(&out)]);
    let first = read_batch(&out.join("round-000.json")).unwrap();
    assert_eq!(first.round, 0);
    assert!(!first.requests.is_empty());
    assert!(out.join("round-009.json").exists());
    let stripped = read_batch(&out.join("upc/round-000.json")).unwrap();
    assert_eq!(stripped.requests.len(), first.requests.len());
    assert!(stripped.requests.iter().all(|r| r.predicate.cell_count(2048) == 2048));

    // same seed, same bytes
    let again = dir.path().join("again");
    ok(&["generate", "--workload", "W2", "--seed", "3", "--out", path(&again)]);
    assert_eq!(
        std::fs::read(out.join("round-004.json")).unwrap(),
        std::fs::read(again.join("round-004.json")).unwrap()
    );
}

#[test]
fn plan_updates_ledger_round_by_round() {
    let dir = tempfile::tempdir().unwrap();
    let batches = dir.path().join("batches");
    ok(&["generate", "--workload", "W1", "--seed", "1", "--out", path(&batches)]);
    let config = batches.join("config.toml");
    SimulationConfig::load(&config).unwrap();
    let ledger = dir.path().join("ledger.json");
    for round in 0..3 {
        let batch = batches.join(format!("round-{round:03}.json"));
        let text = ok(&["plan", "--config", path(&config), "--round-in", path(&batch), "--ledger", path(&ledger)]);
        assert!(text.contains(&format!("round {round}:")), "{text}");
    }
    let pop = read_ledger(&ledger).unwrap();
    assert_eq!(pop.round, 2);
    let policies = read_policies(&dir.path().join("policies.json")).unwrap();
    assert!(!policies.is_empty());
    assert!(policies.windows(2).all(|w| w[0].policy_id < w[1].policy_id));

    // the ledger cannot go back in time
    let old = batches.join("round-001.json");
    let out = dpplan(&["plan", "--config", path(&config), "--round-in", path(&old), "--ledger", path(&ledger)]);
    assert!(!out.status.success());
}

#[test]
fn simulate_then_report_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = SimulationConfig::desk(Family::W1);
    c.workload.rounds = 3;
    let config = dir.path().join("sim.toml");
    std::fs::write(&config, c.to_toml().unwrap()).unwrap();
    let sub = dir.path().join("sub");
    let upc = dir.path().join("upc");
    let common = ["--config", path(&config), "--algorithm", "dpk", "--objective", "utility", "--seeds", "0,1"];
    let text = ok(&[&["simulate"][..], &common, &["--accounting", "subsampled", "--out", path(&sub)]].concat());
    assert_eq!(text.lines().count(), 2);
    ok(&[&["simulate"][..], &common, &["--accounting", "upc", "--out", path(&upc)]].concat());
    assert!(sub.join("seed-1/metrics.csv").exists());

    let csv = dir.path().join("series.csv");
    let text = ok(&["report", "--in", path(&sub), "--csv", path(&csv)]);
    assert!(text.contains("runs: 2"), "{text}");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
    let text = ok(&["report", "--in", path(&sub), "--compare", path(&upc)]);
    assert!(text.contains("utility ratio"), "{text}");
}

#[test]
fn bad_arguments_fail() {
    assert!(!dpplan(&["simulate", "--algorithm", "magic", "--out", "x"]).status.success());
    assert!(!dpplan(&["report", "--in", "/nonexistent/dir"]).status.success());
}
