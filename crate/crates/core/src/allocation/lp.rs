use std::collections::HashMap;
use std::fmt::Write;

use super::engine::LoadState;
use super::problem::Problem;
use super::{Algorithm, Allocation};
use crate::error::{Error, Result};

/// Writes the problem in CPLEX LP format for an external solver.
///
/// Variables: `y{i}` accepts request `i`; `o{i}_{k}` picks option `k` when a
/// request has several; `z{c}_{a}` switches off order `a` of constraint `c`.
/// A switched-off order is relaxed by a big-M equal to its worst overshoot,
/// and every constraint keeps at least one order switched on.
pub fn to_lp(problem: &Problem) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "\\ request selection, {} requests", problem.requests.len());
    s.push_str("Maximize\n obj:");
    if problem.requests.is_empty() {
        s.push_str(" 0");
    }
    for (i, r) in problem.requests.iter().enumerate() {
        let _ = write!(s, " + {} y{i}", num(r.weight));
    }
    s.push_str("\nSubject To\n");

    let var = |i: usize, k: usize| -> String {
        if problem.requests[i].options.len() == 1 {
            format!("y{i}")
        } else {
            format!("o{i}_{k}")
        }
    };
    for (i, r) in problem.requests.iter().enumerate() {
        if r.options.len() > 1 {
            let _ = write!(s, " pick{i}:");
            for k in 0..r.options.len() {
                let _ = write!(s, " + o{i}_{k}");
            }
            let _ = writeln!(s, " - y{i} = 0");
        } else if r.options.is_empty() {
            let _ = writeln!(s, " none{i}: y{i} = 0");
        }
    }
    let orders = problem.order_count();
    let mut zvars = Vec::new();
    for (c, con) in problem.constraints.iter().enumerate() {
        let mut loaders = Vec::new();
        for (i, r) in problem.requests.iter().enumerate() {
            for (k, o) in r.options.iter().enumerate() {
                if o.constraints.contains(&c) {
                    loaders.push((i, k));
                }
            }
        }
        for a in 0..orders {
            let z = format!("z{c}_{a}");
            zvars.push(z.clone());
            if con.budget.is_marked(a) {
                let _ = writeln!(s, " off{c}_{a}: {z} = 1");
                continue;
            }
            let b = con.budget.get(a);
            let mut total = 0.0;
            let mut terms = String::new();
            for &(i, k) in &loaders {
                let cost = &problem.requests[i].cost;
                if cost.is_marked(a) {
                    let _ = writeln!(s, " inf{c}_{a}_{i}_{k}: {} - {z} <= 0", var(i, k));
                    continue;
                }
                total += cost.get(a);
                let _ = write!(terms, " + {} {}", num(cost.get(a)), var(i, k));
            }
            let big_m = (total - b).max(0.0);
            if terms.is_empty() {
                terms.push_str(" 0 y0");
            }
            let _ = writeln!(s, " c{c}_{a}:{terms} - {} {z} <= {}", num(big_m), num(b));
        }
        let _ = write!(s, " any{c}:");
        for a in 0..orders {
            let _ = write!(s, " + z{c}_{a}");
        }
        let _ = writeln!(s, " <= {}", orders - 1);
    }
    s.push_str("Binary\n");
    for (i, r) in problem.requests.iter().enumerate() {
        let _ = writeln!(s, " y{i}");
        if r.options.len() > 1 {
            for k in 0..r.options.len() {
                let _ = writeln!(s, " o{i}_{k}");
            }
        }
    }
    for z in zvars {
        let _ = writeln!(s, " {z}");
    }
    s.push_str("End\n");
    s
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Reads `name value` lines (the common `.sol` layout; other lines are
/// ignored) and rebuilds the allocation, checking feasibility on the way.
pub fn parse_solution(problem: &Problem, text: &str) -> Result<Allocation> {
    let mut values: HashMap<&str, f64> = HashMap::new();
    for line in text.lines() {
        let mut it = line.split_whitespace();
        if let (Some(name), Some(v)) = (it.next(), it.next()) {
            if let Ok(v) = v.parse::<f64>() {
                values.insert(name, v);
            }
        }
    }
    let on = |name: &str| values.get(name).is_some_and(|v| *v > 0.5);
    let mut state = LoadState::new(problem)?;
    let mut chosen = Vec::new();
    for (i, r) in problem.requests.iter().enumerate() {
        if !on(&format!("y{i}")) {
            continue;
        }
        let k = if r.options.len() == 1 {
            0
        } else {
            (0..r.options.len())
                .find(|k| on(&format!("o{i}_{k}")))
                .ok_or_else(|| Error::Conflict(format!("request {i} accepted without an option")))?
        };
        if !state.can_take(i, k) {
            return Err(Error::Conflict(format!("imported solution overcommits at request {i}")));
        }
        state.take(i, k);
        chosen.push((i, k));
    }
    Ok(Allocation::from_choices(problem, chosen, state.witnesses(), false, Algorithm::Exact))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::tests::single_segment;

    #[test]
    fn lp_has_all_sections() {
        let p = single_segment(&[0.6, 0.6, 0.4], &[2.0, 2.0, 3.0], 1.0);
        let lp = to_lp(&p);
        for needle in ["Maximize", "Subject To", "Binary", "End", "c0_0:", "any0:", " y2"] {
            assert!(lp.contains(needle), "missing {needle}\n{lp}");
        }
        assert!(lp.contains("any0: + z0_0 <= 0"));
    }

    #[test]
    fn solution_round_trips() {
        let p = single_segment(&[0.6, 0.6, 0.4], &[2.0, 2.0, 3.0], 1.0);
        let a = parse_solution(&p, "# objective 5\ny0 1\ny1 0\ny2 1\nz0_0 0\n").unwrap();
        assert_eq!(a.accepted_ids(), vec![1, 3]);
        assert_eq!(a.objective, 5.0);
        assert!(parse_solution(&p, "y0 1\ny1 1\n").is_err());
    }
}
