//! Per-round request selection over the contested budget constraints.
//!
//! A [`Problem`] holds the residual requests and one constraint per
//! contested (segment, group) pair. A constraint holds when the summed
//! demand fits the remaining budget at *some* order; different constraints
//! may use different orders. FCFS, DPF and DPK are greedy scans in
//! different orders; [`solve_exact`] is a branch and bound.

mod apply;
mod engine;
mod exact;
mod greedy;
mod lp;
mod problem;
mod upc;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use apply::{apply_allocation, block_charges, PolicyRecord};
pub use exact::solve_exact;
pub use greedy::{dominant_share, dpf_order, dpk_efficiency, dpk_order, fcfs_order};
pub use lp::{parse_solution, to_lp};
pub use problem::{
    build_per_cell, build_problem, build_unpruned, Constraint, ObjectiveMode, Problem, ProblemRequest,
    RequestOption, Scope, MAX_OPTIONS,
};
pub use upc::{round_half_up, to_upc, upc_group_count};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::population::{GroupId, Population};
use crate::rdp::{admitting_order, RdpVector};
use crate::segmentation::prune::groups_of;
use crate::segmentation::{compute_segments_with, prune, PruneOutcome, RequestRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fcfs,
    Dpf,
    #[default]
    Dpk,
    Exact,
}

impl Algorithm {
    pub const HEURISTICS: [Algorithm; 3] = [Algorithm::Fcfs, Algorithm::Dpf, Algorithm::Dpk];
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Fcfs => "fcfs",
            Algorithm::Dpf => "dpf",
            Algorithm::Dpk => "dpk",
            Algorithm::Exact => "exact",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fcfs" => Ok(Algorithm::Fcfs),
            "dpf" => Ok(Algorithm::Dpf),
            "dpk" => Ok(Algorithm::Dpk),
            "exact" | "ilp" => Ok(Algorithm::Exact),
            other => Err(Error::param(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// An accepted request and the groups it is served from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grant {
    /// Position in the round's batch.
    pub position: usize,
    pub request_id: u64,
    pub groups: Vec<GroupId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub algorithm: Algorithm,
    /// Ascending by batch position.
    pub accepted: Vec<Grant>,
    pub objective: f64,
    /// Proven optimal; only the exact solver sets this.
    pub optimal: bool,
    /// Admitting order per problem constraint, `None` when nothing loads it
    /// or no problem was built.
    pub witnesses: Vec<Option<usize>>,
}

impl Allocation {
    pub(crate) fn from_choices(
        problem: &Problem,
        mut chosen: Vec<(usize, usize)>,
        witnesses: Vec<Option<usize>>,
        optimal: bool,
        algorithm: Algorithm,
    ) -> Self {
        chosen.sort_unstable();
        let objective = chosen.iter().map(|(i, _)| problem.requests[*i].weight).sum();
        let mut accepted: Vec<Grant> = chosen
            .into_iter()
            .map(|(i, o)| {
                let r = &problem.requests[i];
                Grant {
                    position: r.position,
                    request_id: r.request_id,
                    groups: r.options[o].groups.clone(),
                }
            })
            .collect();
        accepted.sort_by_key(|g| g.position);
        Allocation {
            algorithm,
            accepted,
            objective,
            optimal,
            witnesses,
        }
    }

    pub fn accepted_ids(&self) -> Vec<u64> {
        self.accepted.iter().map(|g| g.request_id).collect()
    }
}

pub fn allocate_fcfs(problem: &Problem) -> Result<Allocation> {
    greedy::greedy_in_order(problem, &fcfs_order(problem), Algorithm::Fcfs)
}

pub fn allocate_dpf(problem: &Problem) -> Result<Allocation> {
    greedy::greedy_in_order(problem, &dpf_order(problem), Algorithm::Dpf)
}

/// Greedy by DPK efficiency, then greedy by weight alone; the better of the
/// two packings wins, the efficiency pass on ties. The second pass covers
/// batches where one heavy request outweighs many dense ones.
pub fn allocate_dpk(problem: &Problem) -> Result<Allocation> {
    let dense = greedy::greedy_in_order(problem, &dpk_order(problem), Algorithm::Dpk)?;
    let heavy = greedy::greedy_in_order(problem, &greedy::weight_desc(problem), Algorithm::Dpk)?;
    Ok(if heavy.objective > dense.objective { heavy } else { dense })
}

pub fn allocate(problem: &Problem, algorithm: Algorithm, time_limit: Option<Duration>) -> Result<Allocation> {
    match algorithm {
        Algorithm::Fcfs => allocate_fcfs(problem),
        Algorithm::Dpf => allocate_dpf(problem),
        Algorithm::Dpk => allocate_dpk(problem),
        Algorithm::Exact => solve_exact(problem, time_limit),
    }
}

/// Recomputes every constraint's load from the accepted grants and returns
/// the lowest admitting order per kept constraint. Independent of how the
/// allocation was found.
pub fn verify_allocation(problem: &Problem, allocation: &Allocation) -> Result<Vec<Option<usize>>> {
    let index: HashMap<usize, usize> = problem.requests.iter().enumerate().map(|(i, r)| (r.position, i)).collect();
    let grants: Vec<(usize, &[GroupId])> = allocation
        .accepted
        .iter()
        .map(|g| {
            index
                .get(&g.position)
                .map(|&i| (i, g.groups.as_slice()))
                .ok_or_else(|| Error::Conflict(format!("request {} is not part of the problem", g.request_id)))
        })
        .collect::<Result<_>>()?;
    let check = |c: &Constraint| -> Result<Option<usize>> {
        let mut load = RdpVector::zeros(&problem.grid);
        let mut loaded = false;
        for &(i, groups) in &grants {
            if c.loaded_by(i, groups) {
                load.compose_assign(&problem.requests[i].cost)?;
                loaded = true;
            }
        }
        if !loaded {
            return Ok(None);
        }
        match admitting_order(&RdpVector::zeros(&problem.grid), &load, &c.budget)? {
            Some(a) => Ok(Some(a)),
            None => Err(Error::Conflict(format!(
                "constraint {:?} of group {} exceeded at every order",
                c.scope, c.group
            ))),
        }
    };
    for c in &problem.implied {
        check(c)?;
    }
    problem.constraints.iter().map(check).collect()
}

/// Everything decided for one round's batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundPlan {
    pub segments: usize,
    pub contested: usize,
    pub prune: PruneOutcome,
    /// Auto-accepted plus optimizer-selected requests.
    pub allocation: Allocation,
    /// Objective of the optimizer's part only.
    pub residual_objective: f64,
    pub planning_time: Duration,
}

/// Segments, prunes, builds the residual problem, allocates and verifies.
pub fn plan_round(
    exec: Exec,
    requests: &[RequestRecord],
    population: &Population,
    algorithm: Algorithm,
    mode: ObjectiveMode,
    time_limit: Option<Duration>,
) -> Result<RoundPlan> {
    let start = Instant::now();
    let segments = compute_segments_with(exec, requests, population)?;
    let outcome = prune(requests, &segments)?;
    let groups = population.active_ids();

    let mut residual = if outcome.residual.is_empty() {
        Allocation {
            algorithm,
            accepted: Vec::new(),
            objective: 0.0,
            optimal: true,
            witnesses: Vec::new(),
        }
    } else {
        let problem = build_problem(requests, &segments, &outcome, mode)?;
        let a = allocate(&problem, algorithm, time_limit)?;
        verify_allocation(&problem, &a)?;
        a
    };
    let residual_objective = residual.objective;

    for &pos in &outcome.auto_accept {
        let r = &requests[pos];
        let eligible = groups_of(r, &groups);
        let take = r.groups.required.map_or(eligible.len(), |n| n as usize);
        residual.accepted.push(Grant {
            position: pos,
            request_id: r.request_id,
            groups: eligible[..take.min(eligible.len())].to_vec(),
        });
        residual.objective += mode.weight_of(r);
    }
    residual.accepted.sort_by_key(|g| g.position);
    Ok(RoundPlan {
        segments: segments.len(),
        contested: outcome.contested.len(),
        prune: outcome,
        allocation: residual,
        residual_objective,
        planning_time: start.elapsed(),
    })
}
