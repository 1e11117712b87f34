use std::time::{Duration, Instant};

use super::engine::LoadState;
use super::greedy::{dpk_order, fcfs_order, greedy_in_order, weight_desc};
use super::problem::Problem;
use super::{Algorithm, Allocation};
use crate::error::Result;

/// Depth-first branch and bound over accept/reject decisions, requests taken
/// by decreasing weight. Bounds: weight of undecided requests that still fit
/// on their own, tightened per constraint by a fractional knapsack over the
/// requests it must carry. Returns the best solution found and whether the
/// search finished.
pub fn solve_exact(problem: &Problem, time_limit: Option<Duration>) -> Result<Allocation> {
    let mut incumbent = greedy_in_order(problem, &dpk_order(problem), Algorithm::Exact)?;
    let fcfs = greedy_in_order(problem, &fcfs_order(problem), Algorithm::Exact)?;
    if fcfs.objective > incumbent.objective {
        incumbent = fcfs;
    }
    let order = weight_desc(problem);
    // constraints every option of a request loads
    let always: Vec<Vec<usize>> = (0..problem.requests.len())
        .map(|i| {
            let opts = &problem.requests[i].options;
            match opts.split_first() {
                None => Vec::new(),
                Some((first, rest)) => first
                    .constraints
                    .iter()
                    .copied()
                    .filter(|c| rest.iter().all(|o| o.constraints.contains(c)))
                    .collect(),
            }
        })
        .collect();
    let mut carried: Vec<Vec<usize>> = vec![Vec::new(); problem.constraints.len()];
    for &i in &order {
        for &c in &always[i] {
            carried[c].push(i);
        }
    }

    let mut search = Search {
        problem,
        order,
        carried,
        state: LoadState::new(problem)?,
        chosen: Vec::new(),
        best_value: incumbent.objective,
        best: None,
        deadline: time_limit.map(|t| Instant::now() + t),
        nodes: 0,
        timed_out: false,
        scratch: Vec::new(),
    };
    search.dfs(0, 0.0);

    let optimal = !search.timed_out;
    let mut out = match search.best {
        Some((chosen, witnesses)) => Allocation::from_choices(problem, chosen, witnesses, optimal, Algorithm::Exact),
        None => incumbent,
    };
    out.optimal = optimal;
    out.algorithm = Algorithm::Exact;
    Ok(out)
}

struct Search<'p> {
    problem: &'p Problem,
    order: Vec<usize>,
    carried: Vec<Vec<usize>>,
    state: LoadState<'p>,
    chosen: Vec<(usize, usize)>,
    best_value: f64,
    best: Option<(Vec<(usize, usize)>, Vec<Option<usize>>)>,
    deadline: Option<Instant>,
    nodes: u64,
    timed_out: bool,
    scratch: Vec<(f64, f64)>,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize, value: f64) {
        if self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes % 512 == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    self.timed_out = true;
                    return;
                }
            }
        }
        if depth == self.order.len() {
            if value > self.best_value {
                self.best_value = value;
                self.best = Some((self.chosen.clone(), self.state.witnesses()));
            }
            return;
        }
        if self.bound(depth, value) <= self.best_value {
            return;
        }
        let i = self.order[depth];
        let w = self.problem.requests[i].weight;
        for o in 0..self.problem.requests[i].options.len() {
            if !self.state.can_take(i, o) {
                continue;
            }
            let mark = self.state.mark();
            self.state.take(i, o);
            self.chosen.push((i, o));
            self.dfs(depth + 1, value + w);
            self.chosen.pop();
            self.state.rollback(mark);
            if self.timed_out {
                break;
            }
        }
        self.dfs(depth + 1, value);
    }

    fn bound(&mut self, depth: usize, value: f64) -> f64 {
        let mut open = vec![false; self.problem.requests.len()];
        let mut simple = value;
        for &i in &self.order[depth..] {
            if self.state.first_feasible_option(i).is_some() {
                open[i] = true;
                simple += self.problem.requests[i].weight;
            }
        }
        let mut best = simple;
        for c in 0..self.problem.constraints.len() {
            let items: Vec<usize> = self.carried[c].iter().copied().filter(|&i| open[i]).collect();
            if items.len() < 2 {
                continue;
            }
            let carried_weight: f64 = items.iter().map(|&i| self.problem.requests[i].weight).sum();
            let mut per_order = f64::NEG_INFINITY;
            let mut bits = self.state.alive(c);
            while bits != 0 {
                let a = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                per_order = per_order.max(self.fractional_knapsack(&items, c, a));
                if per_order >= carried_weight {
                    break;
                }
            }
            let b = simple - carried_weight + per_order.max(0.0);
            if b < best {
                best = b;
            }
        }
        best
    }

    fn fractional_knapsack(&mut self, items: &[usize], c: usize, a: usize) -> f64 {
        let budget = self.problem.constraints[c].budget.get(a);
        // same slack the feasibility check grants
        let mut cap = self.state.slack(c, a) + crate::rdp::FEASIBILITY_TOLERANCE * budget.abs().max(1.0);
        self.scratch.clear();
        let mut total = 0.0;
        for &i in items {
            let r = &self.problem.requests[i];
            if r.cost.is_marked(a) {
                continue;
            }
            let d = r.cost.get(a);
            if d <= 0.0 {
                total += r.weight;
            } else {
                self.scratch.push((r.weight, d));
            }
        }
        self.scratch
            .sort_by(|x, y| (y.0 / y.1).total_cmp(&(x.0 / x.1)));
        for &(w, d) in &self.scratch {
            if d <= cap {
                total += w;
                cap -= d;
            } else {
                if cap > 0.0 {
                    total += w * cap / d;
                }
                break;
            }
        }
        total
    }
}
