use std::sync::Arc;

use dpplan_core::population::{window_closed_form, AttributeSchema, Population, RotationConfig, UnlockPolicy};
use dpplan_core::rdp::{AlphaGrid, RdpVector};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn scalar_population(k: u32, delta: f64, eps: f64) -> Population {
    let grid = AlphaGrid::new(vec![2.0]).unwrap();
    let policy = UnlockPolicy::new(delta, k, RdpVector::new(&grid, vec![eps]).unwrap()).unwrap();
    Population::new(AttributeSchema::new(1).unwrap(), RotationConfig::new(k, k).unwrap(), policy).unwrap()
}

fn charge_all(pop: &mut Population, c: f64) {
    let cost = Arc::new(RdpVector::new(pop.grid(), vec![c]).unwrap());
    for id in pop.active_ids() {
        pop.consume_block(id, 0, cost.clone()).expect("admitted charge");
    }
}

#[test]
fn greedy_schedule_is_periodic() {
    for k in [4u32, 8, 12] {
        for delta in [0.0, 0.4, 0.8, 1.0] {
            let eps = 3.0;
            let mut pop = scalar_population(k, delta, eps);
            for round in 0..(3 * k + k / 2) {
                let b = pop.window_available(0).unwrap().get(0);
                let phase = round % k;
                let expect = if phase < k / 2 { 1.0 + delta } else { 1.0 - delta } * eps / k as f64;
                assert!((b - expect).abs() < TOL, "K={k} Δ={delta} round {round}: {b} vs {expect}");
                charge_all(&mut pop, b);
                pop.advance_round();
            }
        }
    }
}

#[test]
fn balanced_schedule_is_always_admitted() {
    for k in [4u32, 8, 12] {
        for delta in [0.0, 0.4, 0.8, 1.0] {
            let mut pop = scalar_population(k, delta, 3.0);
            for _ in 0..(6 * k) {
                charge_all(&mut pop, 3.0 / k as f64);
                pop.advance_round();
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_admitted_sequences(
        k_idx in 0usize..3,
        d_idx in 0usize..4,
        eps in 0.5f64..5.0,
        draws in proptest::collection::vec(0.0f64..=1.0, 60),
    ) {
        let k = [4u32, 8, 12][k_idx];
        let delta = [0.0, 0.4, 0.8, 1.0][d_idx];
        let lo = (1.0 - delta) * eps / k as f64;
        let hi = (1.0 + delta) * eps / k as f64;
        let mut pop = scalar_population(k, delta, eps);
        let mut charges: Vec<f64> = Vec::new();
        for (round, u) in draws.iter().enumerate() {
            let b = pop.window_available(0).unwrap().get(0);
            prop_assert!(b >= lo - TOL && b <= hi + TOL, "P2 violated: {} not in [{}, {}]", b, lo, hi);
            if round + 1 >= k as usize {
                let start = round + 1 - k as usize;
                let closed = window_closed_form(eps, k, delta, &charges[start..round]);
                prop_assert!((closed - b).abs() < TOL, "P4: {} vs {}", closed, b);
            }
            let c = lo + u * (b - lo).max(0.0);
            charge_all(&mut pop, c);
            charges.push(c);
            pop.advance_round();
        }
        for g in &pop.residual_pool {
            if let Some(c) = g.consumed(0) {
                prop_assert!(c.get(0) <= eps + TOL, "P1 violated: {}", c.get(0));
            }
        }
    }
}
