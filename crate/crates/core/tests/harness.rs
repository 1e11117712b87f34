use dpplan_core::allocation::Algorithm;
use dpplan_core::harness::{
    audit, compare, load_runs, read_ledger, read_policies, report, run_replicated, run_simulation, write_run,
    Accounting, SimulationConfig,
};
use dpplan_core::workload::Family;
use dpplan_core::Exec;

/// Desk profile cut to a few rounds to keep debug builds quick.
fn short(family: Family, rounds: u32) -> SimulationConfig {
    let mut c = SimulationConfig::desk(family);
    c.workload.rounds = rounds;
    c
}

#[test]
fn metrics_are_conserved() {
    for algorithm in [Algorithm::Fcfs, Algorithm::Dpf, Algorithm::Dpk] {
        let mut c = short(Family::W4, 4);
        c.algorithm = algorithm;
        let r = run_simulation(&c, Exec::Sequential).unwrap();
        assert_eq!(r.metrics.len(), 4);
        for m in &r.metrics {
            assert_eq!(m.accepted_by_tier.iter().sum::<usize>(), m.accepted, "{algorithm}");
            assert_eq!(m.offered_by_tier.iter().sum::<usize>(), m.offered);
            assert!(m.accepted <= m.offered);
            assert!(m.utility_accepted <= m.utility_offered + 1e-12);
            assert_eq!(m.auto_accepted + m.auto_rejected + m.residual, m.offered);
            // Orders that stopped admitting may run past the budget.
            assert!(m.utilization.iter().flatten().all(|u| *u >= 0.0));
        }
        assert_eq!(r.policies.len(), r.total_accepted());
        audit(&r.population, 3.0, 1e-7).unwrap();
    }
}

#[test]
fn policies_are_numbered_in_order() {
    let r = run_simulation(&short(Family::W1, 3), Exec::Sequential).unwrap();
    assert!(!r.policies.is_empty());
    assert!(r.policies.windows(2).all(|w| w[0].policy_id < w[1].policy_id && w[0].round <= w[1].round));
}

#[test]
fn simulations_are_deterministic() {
    let c = short(Family::W2, 3);
    let strip = |mut r: dpplan_core::harness::SimulationResult| {
        r.metrics.iter_mut().for_each(|m| m.wall_ms = 0.0);
        (r.metrics, r.policies)
    };
    let a = strip(run_simulation(&c, Exec::Sequential).unwrap());
    let b = strip(run_simulation(&c, Exec::Parallel).unwrap());
    assert_eq!(a, b);
}

#[test]
fn upc_charges_whole_domain() {
    let mut c = short(Family::W1, 3);
    c.accounting = Accounting::Upc;
    let r = run_simulation(&c, Exec::Sequential).unwrap();
    let domain = c.workload.domain_size;
    let k = c.rotation.window_k as f64;
    assert!(!r.policies.is_empty());
    for p in &r.policies {
        assert_eq!(p.predicate.cell_count(domain), domain);
        assert_eq!(p.groups.len() as f64, (p.sample_fraction * k).round());
    }
    audit(&r.population, 3.0, 1e-7).unwrap();
}

#[test]
fn runs_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = short(Family::W1, 3);
    c.seeds = vec![1, 2];
    for (name, accounting) in [("sub", Accounting::Subsampled), ("upc", Accounting::Upc)] {
        c.accounting = accounting;
        for r in run_replicated(&c, Exec::Parallel).unwrap() {
            write_run(&dir.path().join(name).join(format!("seed-{}", r.seed)), &c, &r).unwrap();
        }
    }
    let sub = load_runs(&dir.path().join("sub")).unwrap();
    assert_eq!(sub.len(), 2);
    assert_eq!(sub[0].config.as_ref().unwrap().workload.seed, 1);
    let rep = report(&sub).unwrap();
    assert_eq!(rep.runs, 2);
    assert_eq!(rep.rounds.len(), 3);
    assert!(rep.total_utility.1 >= 0.0);
    let upc = load_runs(&dir.path().join("upc")).unwrap();
    let cmp = compare(&sub, &upc).unwrap();
    assert!(cmp.utility_ratio.is_finite() && cmp.utility_ratio > 0.0);

    let seed_dir = dir.path().join("sub/seed-1");
    let ledger = read_ledger(&seed_dir.join("ledger.json")).unwrap();
    audit(&ledger, 3.0, 1e-7).unwrap();
    let policies = read_policies(&seed_dir.join("policies.json")).unwrap();
    assert_eq!(policies.len() as f64, sub[0].total_accepted());

    // Different seeds cannot be joined.
    let mut other = c.clone();
    other.seeds = vec![7, 8];
    for r in run_replicated(&other, Exec::Sequential).unwrap() {
        write_run(&dir.path().join("other").join(format!("seed-{}", r.seed)), &other, &r).unwrap();
    }
    assert!(compare(&upc, &load_runs(&dir.path().join("other")).unwrap()).is_err());
}
