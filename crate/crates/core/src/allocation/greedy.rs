use super::engine::LoadState;
use super::problem::Problem;
use super::{Algorithm, Allocation};
use crate::error::Result;

/// Accepts requests in the given order whenever they still fit.
pub(crate) fn greedy_in_order(problem: &Problem, order: &[usize], algorithm: Algorithm) -> Result<Allocation> {
    let mut state = LoadState::new(problem)?;
    let mut chosen = Vec::new();
    for &i in order {
        if let Some(o) = state.first_feasible_option(i) {
            state.take(i, o);
            chosen.push((i, o));
        }
    }
    Ok(Allocation::from_choices(problem, chosen, state.witnesses(), false, algorithm))
}

/// Sorts ascending by `(key, arrival_time, request_id)`.
fn order_by_key(problem: &Problem, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let keys: Vec<f64> = (0..problem.requests.len()).map(key).collect();
    let mut order: Vec<usize> = (0..problem.requests.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&problem.requests[a], &problem.requests[b]);
        keys[a]
            .total_cmp(&keys[b])
            .then(ra.arrival_time.total_cmp(&rb.arrival_time))
            .then(ra.request_id.cmp(&rb.request_id))
    });
    order
}

pub fn fcfs_order(problem: &Problem) -> Vec<usize> {
    order_by_key(problem, |_| 0.0)
}

/// `d/B` at order `a`; zero demand is free even against an exhausted budget.
fn demand_ratio(problem: &Problem, i: usize, c: usize, a: usize) -> f64 {
    let cost = &problem.requests[i].cost;
    let budget = &problem.constraints[c].budget;
    if cost.is_marked(a) || budget.is_marked(a) {
        return f64::INFINITY;
    }
    let (d, b) = (cost.get(a), budget.get(a));
    if d == 0.0 {
        0.0
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        d / b
    }
}

/// Constraints of the request's first option (all options for the same
/// request touch the same scopes, only the groups differ).
fn associated(problem: &Problem, i: usize) -> &[usize] {
    problem.requests[i]
        .options
        .first()
        .map(|o| o.constraints.as_slice())
        .unwrap_or(&[])
}

/// Smallest, over orders, of the largest share of any associated budget.
pub fn dominant_share(problem: &Problem, i: usize) -> f64 {
    let cs = associated(problem, i);
    if cs.is_empty() {
        return 0.0;
    }
    (0..problem.order_count())
        .map(|a| cs.iter().map(|&c| demand_ratio(problem, i, c, a)).fold(0.0, f64::max))
        .fold(f64::INFINITY, f64::min)
}

/// Weight per unit of normalized demand, summed over associated budgets.
pub fn dpk_efficiency(problem: &Problem, i: usize) -> f64 {
    let w = problem.requests[i].weight;
    let denom: f64 = associated(problem, i)
        .iter()
        .map(|&c| {
            (0..problem.order_count())
                .map(|a| demand_ratio(problem, i, c, a))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    if denom == 0.0 {
        f64::INFINITY
    } else {
        w / denom
    }
}

pub fn dpf_order(problem: &Problem) -> Vec<usize> {
    order_by_key(problem, |i| {
        let share = dominant_share(problem, i);
        let w = problem.requests[i].weight;
        match (share == 0.0, w > 0.0) {
            (true, _) => 0.0,
            (false, true) => share / w,
            (false, false) => f64::INFINITY,
        }
    })
}

pub fn dpk_order(problem: &Problem) -> Vec<usize> {
    order_by_key(problem, |i| match dpk_efficiency(problem, i) {
        e if e.is_nan() => f64::INFINITY,
        e => -e,
    })
}

pub(crate) fn weight_desc(problem: &Problem) -> Vec<usize> {
    order_by_key(problem, |i| -problem.requests[i].weight)
}
