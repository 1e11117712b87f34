use dpplan_core::population::{unlocked_budget, UnlockPolicy};
use dpplan_core::rdp::{filter_admits, AdpBudget, AlphaGrid, MechanismKind, RdpVector};
use dpplan_core::segmentation::Predicate;
use dpplan_core::workload::{
    generate, sample_selection, upc_variant, CostModel, Family, Tier, Workload, WorkloadConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Desk-sized W4 with about 10⁴ requests in total.
fn busy_w4(seed: u64) -> WorkloadConfig {
    let mut c = WorkloadConfig::desk(Family::W4, seed);
    c.request_interarrival_minutes = c.round_duration_minutes / 1000.0;
    c
}

fn run(config: &WorkloadConfig) -> Workload {
    generate(config, &CostModel::new(AlphaGrid::standard())).unwrap()
}

/// |observed − expected| within 3σ of a binomial count.
fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
    let mean = n as f64 * p;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    (count as f64 - mean).abs() <= 3.0 * sd
}

#[test]
fn tier_and_mechanism_frequencies() {
    let config = busy_w4(11);
    let w = run(&config);
    let n = w.request_count();
    assert!(n > 9_000, "only {n} requests");
    let all: Vec<_> = w.batches.iter().flatten().collect();
    for tier in Tier::ALL {
        let c = all.iter().filter(|r| r.tier == Some(tier)).count();
        assert!(within_3_sigma(c, n, 1.0 / 3.0), "{tier}: {c} of {n}");
    }
    for kind in MechanismKind::ALL {
        let c = all.iter().filter(|r| r.mechanism.map(|m| m.kind) == Some(kind)).count();
        assert!(within_3_sigma(c, n, 1.0 / 6.0), "{kind:?}: {c} of {n}");
    }
    let quarter = all.iter().filter(|r| r.sample_fraction == 0.25).count();
    assert!(within_3_sigma(quarter, n, 0.5));
}

#[test]
fn batch_sizes_follow_the_arrival_rate() {
    let config = busy_w4(3);
    let w = run(&config);
    let per_round = config.expected_requests_per_round();
    for b in &w.batches {
        assert!((b.len() as f64 - per_round).abs() < 4.0 * per_round.sqrt(), "{}", b.len());
    }
    assert_eq!(w.users.len(), config.rounds as usize);
}

#[test]
fn utilities_are_normalized_and_seeded() {
    for family in [Family::W1, Family::W2, Family::W3, Family::W4] {
        let config = WorkloadConfig::desk(family, 5);
        let a = run(&config);
        let b = run(&config);
        assert_eq!(a, b);
        let total: f64 = a.batches.iter().flatten().map(|r| r.utility).sum();
        assert!((total - 1.0).abs() < 1e-9, "{family:?}: {total}");
        assert!(a.batches.iter().flatten().all(|r| r.utility >= 0.0));
        let other = run(&WorkloadConfig::desk(family, 6));
        assert_ne!(a, other);
    }
}

#[test]
fn mice_fit_a_fresh_block() {
    let grid = AlphaGrid::standard();
    let budget = AdpBudget::new(3.0, 1e-7).unwrap().to_rdp_budget(&grid).unwrap();
    let policy = UnlockPolicy::new(0.4, 12, budget).unwrap();
    let first_round = unlocked_budget(1, &policy).unwrap();
    let zero = RdpVector::zeros(&grid);
    let costs = CostModel::new(grid.clone());
    let config = busy_w4(17);
    let w = generate(&config, &costs).unwrap();
    let mut mice = 0;
    for r in w.batches.iter().flatten() {
        if r.tier != Some(Tier::Mouse) {
            continue;
        }
        mice += 1;
        assert!(filter_admits(&zero, &r.cost, &first_round).unwrap(), "{:?}", r.mechanism);
        // Without subsampling as well.
        let full = upc_variant(r, &costs, config.domain_size).unwrap();
        assert!(filter_admits(&zero, &full.cost, &first_round).unwrap(), "{:?}", r.mechanism);
    }
    assert!(mice > 1000);
}

#[test]
fn amplified_cost_never_exceeds_the_base() {
    let costs = CostModel::new(AlphaGrid::standard());
    let config = WorkloadConfig::desk(Family::W4, 8);
    for r in run(&config).batches.iter().flatten() {
        let base = upc_variant(r, &costs, config.domain_size).unwrap();
        assert!(r.cost.dominated_by(&base.cost));
        assert_eq!(base.predicate, Predicate::full(config.domain_size));
        assert_eq!(base.utility, r.utility);
    }
}

#[test]
fn selection_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let domain = 2048;
    let mean_len = |a: f64, b: f64, rng: &mut ChaCha8Rng| {
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            match sample_selection(a, b, domain, rng).unwrap() {
                Predicate::Interval { start, len } => {
                    assert!(start < domain && (1..=domain).contains(&len));
                    sum += len as f64;
                }
                p => panic!("{p:?}"),
            }
        }
        sum / n as f64
    };
    let narrow = mean_len(1.0, 10.0, &mut rng);
    assert!((narrow / domain as f64 - 1.0 / 11.0).abs() < 0.005, "{narrow}");
    let half = mean_len(2.0, 2.0, &mut rng);
    assert!((half / domain as f64 - 0.5).abs() < 0.01, "{half}");
}
