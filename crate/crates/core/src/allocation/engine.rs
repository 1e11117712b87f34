use super::problem::Problem;
use crate::error::{Error, Result};

/// Incremental feasibility state: per-constraint loads and the set of orders
/// still within budget. Loads only grow, so the alive set only shrinks; an
/// undo log restores earlier states for backtracking.
pub(crate) struct LoadState<'p> {
    problem: &'p Problem,
    orders: usize,
    loads: Vec<f64>,
    alive: Vec<u64>,
    undo: Vec<(usize, u64)>,
    undo_loads: Vec<f64>,
}

impl<'p> LoadState<'p> {
    pub fn new(problem: &'p Problem) -> Result<Self> {
        let orders = problem.order_count();
        if orders > 64 {
            return Err(Error::param(format!("at most 64 orders supported, got {orders}")));
        }
        let alive = problem
            .constraints
            .iter()
            .map(|c| {
                (0..orders).fold(0u64, |m, a| {
                    let b = c.budget.get(a);
                    if !c.budget.is_marked(a) && fits(0.0, b) {
                        m | (1 << a)
                    } else {
                        m
                    }
                })
            })
            .collect();
        Ok(LoadState {
            problem,
            orders,
            loads: vec![0.0; problem.constraints.len() * orders],
            alive,
            undo: Vec::new(),
            undo_loads: Vec::new(),
        })
    }

    /// Orders of constraint `c` that stay within budget with `i` added.
    #[inline]
    fn alive_after(&self, c: usize, i: usize) -> u64 {
        let cost = &self.problem.requests[i].cost;
        let budget = &self.problem.constraints[c].budget;
        let base = c * self.orders;
        let mut m = self.alive[c];
        let mut bits = m;
        while bits != 0 {
            let a = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let x = cost.get(a);
            if cost.is_marked(a) || !fits(self.loads[base + a] + x, budget.get(a)) {
                m &= !(1 << a);
            }
        }
        m
    }

    pub fn can_take(&self, i: usize, option: usize) -> bool {
        self.problem.requests[i].options[option]
            .constraints
            .iter()
            .all(|&c| self.alive_after(c, i) != 0)
    }

    pub fn first_feasible_option(&self, i: usize) -> Option<usize> {
        (0..self.problem.requests[i].options.len()).find(|&o| self.can_take(i, o))
    }

    pub fn take(&mut self, i: usize, option: usize) {
        let problem = self.problem;
        let cost = &problem.requests[i].cost;
        for &c in &problem.requests[i].options[option].constraints {
            let next = self.alive_after(c, i);
            let base = c * self.orders;
            self.undo.push((c, self.alive[c]));
            self.undo_loads.extend_from_slice(&self.loads[base..base + self.orders]);
            for a in 0..self.orders {
                if !cost.is_marked(a) {
                    self.loads[base + a] += cost.get(a);
                }
            }
            self.alive[c] = next;
        }
    }

    pub fn mark(&self) -> usize {
        self.undo.len()
    }

    pub fn rollback(&mut self, mark: usize) {
        while self.undo.len() > mark {
            let (c, alive) = self.undo.pop().expect("non-empty");
            let base = c * self.orders;
            let start = self.undo_loads.len() - self.orders;
            self.loads[base..base + self.orders].copy_from_slice(&self.undo_loads[start..]);
            self.undo_loads.truncate(start);
            self.alive[c] = alive;
        }
    }

    pub fn alive(&self, c: usize) -> u64 {
        self.alive[c]
    }

    /// Budget left at order `a` of constraint `c`.
    pub fn slack(&self, c: usize, a: usize) -> f64 {
        self.problem.constraints[c].budget.get(a) - self.loads[c * self.orders + a]
    }

    /// Lowest alive order of every constraint.
    pub fn witnesses(&self) -> Vec<Option<usize>> {
        self.alive
            .iter()
            .map(|m| (*m != 0).then(|| m.trailing_zeros() as usize))
            .collect()
    }
}

#[inline]
pub(crate) fn fits(load: f64, budget: f64) -> bool {
    load <= budget + crate::rdp::FEASIBILITY_TOLERANCE * budget.abs().max(1.0)
}
