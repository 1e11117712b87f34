//! Random small instances and brute-force oracles shared by the integration
//! tests and the acceptance runner.
#![allow(dead_code)]

use std::sync::Arc;

use dpplan_core::allocation::{Constraint, Problem};
use dpplan_core::population::{AttributeSchema, GroupId, Population, RotationConfig, UnlockPolicy};
use dpplan_core::rdp::{AlphaGrid, RdpVector, FEASIBILITY_TOLERANCE};
use dpplan_core::segmentation::{GroupDemand, Predicate, RequestRecord};
use rand::seq::index::sample;
use rand::Rng;

pub const ORDERS: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

pub struct Instance {
    pub population: Population,
    pub requests: Vec<RequestRecord>,
}

#[derive(Debug, Clone, Copy)]
pub struct Shape {
    pub max_requests: usize,
    pub domain: u32,
    pub max_orders: usize,
    /// Probability that a request restricts its groups.
    pub group_choice: f64,
}

impl Default for Shape {
    fn default() -> Self {
        Shape {
            max_requests: 12,
            domain: 6,
            max_orders: 4,
            group_choice: 0.3,
        }
    }
}

fn fits(load: f64, budget: f64) -> bool {
    load <= budget + FEASIBILITY_TOLERANCE * budget.abs().max(1.0)
}

/// Some order where both sides are finite and the load fits.
pub fn exists_order(load: &[f64], budget: &[f64]) -> bool {
    load.iter()
        .zip(budget)
        .any(|(l, b)| l.is_finite() && b.is_finite() && fits(*l, *b))
}

pub fn random_instance<R: Rng>(rng: &mut R, shape: Shape) -> Instance {
    let n_orders = rng.random_range(1..=shape.max_orders);
    let mut picked: Vec<f64> = sample(rng, ORDERS.len(), n_orders).into_iter().map(|i| ORDERS[i]).collect();
    picked.sort_by(f64::total_cmp);
    let grid = AlphaGrid::new(picked).unwrap();
    let k = if rng.random_bool(0.5) { 2 } else { 4 };
    let total: Vec<f64> = (0..n_orders).map(|_| rng.random_range(1.0..4.0)).collect();
    let policy = UnlockPolicy::new(0.4, k, RdpVector::new(&grid, total.clone()).unwrap()).unwrap();
    let mut population = Population::new(
        AttributeSchema::new(shape.domain).unwrap(),
        RotationConfig::new(k, k).unwrap(),
        policy,
    )
    .unwrap();

    // uneven history
    for g in population.active_ids() {
        for cell in 0..shape.domain {
            if rng.random_bool(0.3) {
                let avail = population.block_remaining(g, cell).unwrap();
                let f = rng.random_range(0.0..0.6);
                let c = RdpVector::new(&grid, avail.values().iter().map(|v| v.max(0.0) * f).collect()).unwrap();
                if population.block_admits(g, cell, &c).unwrap() {
                    population.consume_block(g, cell, Arc::new(c)).unwrap();
                }
            }
        }
    }

    let groups = population.active_ids();
    let n = rng.random_range(1..=shape.max_requests);
    let requests = (0..n)
        .map(|i| {
            let predicate = if rng.random_bool(0.8) {
                Predicate::interval(rng.random_range(0..shape.domain), rng.random_range(1..=shape.domain))
            } else {
                let m = rng.random_range(1..=shape.domain as usize);
                Predicate::cells(sample(rng, shape.domain as usize, m).into_iter().map(|c| c as u32).collect())
            };
            let cost: Vec<f64> = total.iter().map(|t| t * rng.random_range(0.02..0.35)).collect();
            let mut r = RequestRecord::new(i as u64 + 1, predicate, RdpVector::new(&grid, cost).unwrap())
                .with_weight(rng.random_range(1..=20) as f64)
                .with_arrival(rng.random_range(0.0..100.0));
            if groups.len() > 1 && rng.random_bool(shape.group_choice) {
                let m = rng.random_range(1..=groups.len());
                let mut eligible: Vec<GroupId> = sample(rng, groups.len(), m).into_iter().map(|j| groups[j]).collect();
                eligible.sort_unstable();
                r = if m > 1 && rng.random_bool(0.5) {
                    let required = rng.random_range(1..m) as u32;
                    r.with_groups(GroupDemand::any_of(eligible, required))
                } else {
                    r.with_groups(GroupDemand::exactly(eligible))
                };
            }
            r
        })
        .collect();
    Instance { population, requests }
}

/// Every way to pick `k` items of `items`.
pub fn choose<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if items.len() < k {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mut rest in choose(&items[1..], k - 1) {
        rest.insert(0, items[0].clone());
        out.push(rest);
    }
    out.extend(choose(&items[1..], k));
    out
}

/// Group sets a request may be served by, read straight off the record.
pub fn group_choices(r: &RequestRecord, active: &[GroupId]) -> Vec<Vec<GroupId>> {
    let eligible: Vec<GroupId> = match &r.groups.eligible {
        Some(e) => e.iter().copied().filter(|g| active.contains(g)).collect(),
        None => active.to_vec(),
    };
    match r.groups.required {
        Some(k) => choose(&eligible, k as usize),
        None => vec![eligible],
    }
}

/// Calls `f` with every assignment of one choice per selected item.
fn for_each_assignment(choices: &[&Vec<Vec<GroupId>>], f: &mut dyn FnMut(&[&Vec<GroupId>]) -> bool) -> bool {
    let mut idx = vec![0usize; choices.len()];
    if choices.iter().any(|c| c.is_empty()) {
        return false;
    }
    loop {
        let pick: Vec<&Vec<GroupId>> = idx.iter().zip(choices).map(|(&i, c)| &c[i]).collect();
        if f(&pick) {
            return true;
        }
        let mut j = 0;
        loop {
            if j == idx.len() {
                return false;
            }
            idx[j] += 1;
            if idx[j] < choices[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Best total weight over all subsets, checked block by block against the
/// population's ledgers. Knows nothing about segments or problems.
pub fn brute_force_blocks(inst: &Instance) -> f64 {
    let pop = &inst.population;
    let reqs = &inst.requests;
    let domain = pop.schema.domain_size;
    let active = pop.active_ids();
    let choices: Vec<Vec<Vec<GroupId>>> = reqs.iter().map(|r| group_choices(r, &active)).collect();
    let remaining: Vec<Vec<Vec<f64>>> = active
        .iter()
        .map(|&g| {
            (0..domain)
                .map(|c| pop.block_remaining(g, c).unwrap().values().to_vec())
                .collect()
        })
        .collect();
    let orders = pop.grid().len();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << reqs.len()) {
        let chosen: Vec<usize> = (0..reqs.len()).filter(|i| mask >> i & 1 == 1).collect();
        let w: f64 = chosen.iter().map(|&i| reqs[i].weight).sum();
        if w <= best {
            continue;
        }
        let opts: Vec<&Vec<Vec<GroupId>>> = chosen.iter().map(|&i| &choices[i]).collect();
        let feasible = for_each_assignment(&opts, &mut |pick| {
            for (gi, g) in active.iter().enumerate() {
                for c in 0..domain {
                    let mut load = vec![0.0; orders];
                    let mut any = false;
                    for (k, &i) in chosen.iter().enumerate() {
                        if pick[k].contains(g) && reqs[i].predicate.contains(c, domain) {
                            any = true;
                            for (l, v) in load.iter_mut().zip(reqs[i].cost.values()) {
                                *l += v;
                            }
                        }
                    }
                    if any && !exists_order(&load, &remaining[gi][c as usize]) {
                        return false;
                    }
                }
            }
            true
        });
        if feasible {
            best = w;
        }
    }
    best
}

fn constraint_ok(p: &Problem, c: &Constraint, chosen: &[usize], pick: &[&Vec<GroupId>]) -> bool {
    let mut load = vec![0.0; p.grid.len()];
    let mut any = false;
    for (k, &i) in chosen.iter().enumerate() {
        if c.loaded_by(i, pick[k]) {
            any = true;
            for (l, v) in load.iter_mut().zip(p.requests[i].cost.values()) {
                *l += v;
            }
        }
    }
    !any || exists_order(&load, c.budget.values())
}

/// Best total weight of a built problem by enumerating subsets and options.
pub fn brute_force_problem(p: &Problem) -> f64 {
    let n = p.requests.len();
    assert!(n <= 20, "enumeration limited to 20 requests");
    let choices: Vec<Vec<Vec<GroupId>>> = p
        .requests
        .iter()
        .map(|r| r.options.iter().map(|o| o.groups.clone()).collect())
        .collect();
    let mut best = 0.0f64;
    for mask in 0u32..(1 << n) {
        let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let w: f64 = chosen.iter().map(|&i| p.requests[i].weight).sum();
        if w <= best {
            continue;
        }
        let opts: Vec<&Vec<Vec<GroupId>>> = chosen.iter().map(|&i| &choices[i]).collect();
        let feasible = for_each_assignment(&opts, &mut |pick| {
            p.constraints
                .iter()
                .chain(&p.implied)
                .all(|c| constraint_ok(p, c, &chosen, pick))
        });
        if feasible {
            best = w;
        }
    }
    best
}
