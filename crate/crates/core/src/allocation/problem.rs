use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{GroupId, Population};
use crate::rdp::{AlphaGrid, RdpVector};
use crate::segmentation::prune::{active_groups, groups_of, request_segments};
use crate::segmentation::{ConstraintKey, PruneOutcome, RequestRecord, Segment};

/// Combinations above this count per request are refused; the x-form is
/// meant for small eligible sets.
pub const MAX_OPTIONS: usize = 4096;

/// What the optimizer maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    #[default]
    Utility,
    RequestCount,
    /// The record's own `weight` field.
    Weight,
}

impl ObjectiveMode {
    pub fn weight_of(self, r: &RequestRecord) -> f64 {
        match self {
            ObjectiveMode::Utility => r.utility,
            ObjectiveMode::RequestCount => 1.0,
            ObjectiveMode::Weight => r.weight,
        }
    }
}

impl fmt::Display for ObjectiveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveMode::Utility => "utility",
            ObjectiveMode::RequestCount => "request_count",
            ObjectiveMode::Weight => "weight",
        })
    }
}

impl FromStr for ObjectiveMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "utility" => Ok(ObjectiveMode::Utility),
            "request_count" | "count" => Ok(ObjectiveMode::RequestCount),
            "weight" => Ok(ObjectiveMode::Weight),
            other => Err(Error::param(format!("unknown objective {other:?}"))),
        }
    }
}

/// What a constraint ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    Segment(usize),
    Cell(u32),
}

/// One way to serve a request: the groups it draws from and the constraint
/// indices that then carry its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestOption {
    pub groups: Vec<GroupId>,
    pub constraints: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemRequest {
    /// Position in the round's batch.
    pub position: usize,
    pub request_id: u64,
    pub arrival_time: f64,
    pub weight: f64,
    pub cost: RdpVector,
    /// A single option for requests needing every eligible group.
    pub options: Vec<RequestOption>,
}

/// `Σ cost_i · [i uses group] ≤ budget` at some order.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub scope: Scope,
    pub group: GroupId,
    pub budget: RdpVector,
    /// Problem requests whose predicate overlaps the scope.
    pub covering: Vec<usize>,
}

impl Constraint {
    /// Whether request `i` served by `groups` loads this constraint.
    pub fn loaded_by(&self, i: usize, groups: &[GroupId]) -> bool {
        groups.contains(&self.group) && self.covering.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub grid: AlphaGrid,
    pub mode: ObjectiveMode,
    pub requests: Vec<ProblemRequest>,
    pub constraints: Vec<Constraint>,
    /// Constraints implied by a kept one (same load pattern, larger budget).
    /// Only used to re-verify solutions.
    pub implied: Vec<Constraint>,
}

impl Problem {
    pub fn is_trivial(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.requests.iter().map(|r| r.weight).sum()
    }

    pub fn order_count(&self) -> usize {
        self.grid.len()
    }
}

/// Residual problem after pruning: residual requests against the contested
/// (segment, group) constraints.
pub fn build_problem(
    requests: &[RequestRecord],
    segments: &[Segment],
    outcome: &PruneOutcome,
    mode: ObjectiveMode,
) -> Result<Problem> {
    let constraints: Vec<(ConstraintKey, RdpVector)> =
        outcome.contested.iter().map(|(k, b)| (*k, b.clone())).collect();
    assemble_segment_problem(requests, segments, &outcome.residual, constraints, mode)
}

/// Every request and every (segment, group) constraint, without pruning.
pub fn build_unpruned(requests: &[RequestRecord], segments: &[Segment], mode: ObjectiveMode) -> Result<Problem> {
    let mut constraints = Vec::new();
    for (s, seg) in segments.iter().enumerate() {
        for (entry, (g, rem)) in seg.per_group_remaining.iter().enumerate() {
            let key = ConstraintKey {
                segment: s,
                entry,
                group: *g,
            };
            constraints.push((key, rem.clone()));
        }
    }
    let selected: Vec<usize> = (0..requests.len()).collect();
    assemble_segment_problem(requests, segments, &selected, constraints, mode)
}

fn assemble_segment_problem(
    requests: &[RequestRecord],
    segments: &[Segment],
    selected: &[usize],
    constraints: Vec<(ConstraintKey, RdpVector)>,
    mode: ObjectiveMode,
) -> Result<Problem> {
    let grid = grid_of(requests, segments)?;
    let groups = active_groups(segments);
    let req_segs = request_segments(segments, requests.len());
    let local: HashMap<usize, usize> = selected.iter().enumerate().map(|(l, &p)| (p, l)).collect();
    let built = constraints
        .into_iter()
        .map(|(key, budget)| {
            let covering = segments[key.segment]
                .members
                .iter()
                .filter_map(|m| local.get(m).copied())
                .collect::<Vec<_>>();
            Constraint {
                scope: Scope::Segment(key.segment),
                group: key.group,
                budget,
                covering: sorted(covering),
            }
        })
        .collect();
    let touches = |pos: usize, c: &Constraint| match c.scope {
        Scope::Segment(s) => req_segs[pos].contains(&s),
        Scope::Cell(_) => unreachable!(),
    };
    finish(grid, mode, requests, selected, &groups, built, touches)
}

/// One constraint per (demanded cell, active group), with the block's own
/// remaining budget. Quadratically larger than the segment form; meant for
/// cross-checking it on small domains.
pub fn build_per_cell(requests: &[RequestRecord], population: &Population, mode: ObjectiveMode) -> Result<Problem> {
    let domain = population.schema.domain_size;
    let groups = population.active_ids();
    let mut covering: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, r) in requests.iter().enumerate() {
        r.validate(domain)?;
        for (a, b) in r.predicate.ranges(domain) {
            for c in a..b {
                covering.entry(c).or_default().push(i);
            }
        }
    }
    let mut built = Vec::new();
    for (cell, cov) in &covering {
        for &g in &groups {
            built.push(Constraint {
                scope: Scope::Cell(*cell),
                group: g,
                budget: population.block_remaining(g, *cell)?,
                covering: cov.clone(),
            });
        }
    }
    let selected: Vec<usize> = (0..requests.len()).collect();
    let touches = |pos: usize, c: &Constraint| c.covering.binary_search(&pos).is_ok();
    finish(population.grid().clone(), mode, requests, &selected, &groups, built, touches)
}

fn finish(
    grid: AlphaGrid,
    mode: ObjectiveMode,
    requests: &[RequestRecord],
    selected: &[usize],
    groups: &[GroupId],
    built: Vec<Constraint>,
    touches: impl Fn(usize, &Constraint) -> bool,
) -> Result<Problem> {
    let (constraints, implied) = eliminate_implied(built, selected, requests, groups);
    let mut out = Vec::with_capacity(selected.len());
    for &pos in selected {
        let r = &requests[pos];
        grid.ensure_same(r.cost.grid())?;
        let eligible = groups_of(r, groups);
        let required = r.groups.required.map_or(eligible.len(), |n| n as usize);
        let mut options = Vec::new();
        for combo in combinations(&eligible, required)? {
            let cs = constraints
                .iter()
                .enumerate()
                .filter(|(_, c)| combo.contains(&c.group) && touches(pos, c))
                .map(|(j, _)| j)
                .collect();
            options.push(RequestOption {
                groups: combo,
                constraints: cs,
            });
        }
        out.push(ProblemRequest {
            position: pos,
            request_id: r.request_id,
            arrival_time: r.arrival_time,
            weight: mode.weight_of(r),
            cost: r.cost.clone(),
            options,
        });
    }
    Ok(Problem {
        grid,
        mode,
        requests: out,
        constraints,
        implied,
    })
}

/// Drops constraints whose load pattern equals another's while their budget
/// is at least as large everywhere: the smaller one implies them. Only
/// applied when every covering request is served by a fixed group set, so
/// the load pattern is known up front.
fn eliminate_implied(
    built: Vec<Constraint>,
    selected: &[usize],
    requests: &[RequestRecord],
    groups: &[GroupId],
) -> (Vec<Constraint>, Vec<Constraint>) {
    let fixed: Vec<Option<Vec<GroupId>>> = selected
        .iter()
        .map(|&p| {
            let r = &requests[p];
            let el = groups_of(r, groups);
            match r.groups.required {
                Some(n) if (n as usize) < el.len() => None,
                _ => Some(el),
            }
        })
        .collect();
    let mut classes: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let mut keep = vec![true; built.len()];
    for (j, c) in built.iter().enumerate() {
        let mut pattern = Vec::with_capacity(c.covering.len());
        let mut known = true;
        for &i in &c.covering {
            match &fixed[i] {
                Some(gs) if gs.contains(&c.group) => pattern.push(i),
                Some(_) => {}
                None => known = false,
            }
        }
        if known {
            classes.entry(pattern).or_default().push(j);
        }
    }
    for members in classes.values() {
        for &a in members {
            for &b in members {
                if a == b || !keep[b] {
                    continue;
                }
                let da = built[b].budget.dominated_by(&built[a].budget);
                let tie = da && built[a].budget.dominated_by(&built[b].budget);
                // b's budget is no larger everywhere; a is implied (keep the earlier on ties)
                if da && (!tie || b < a) {
                    keep[a] = false;
                    break;
                }
            }
        }
    }
    let mut kept = Vec::new();
    let mut implied = Vec::new();
    for (c, k) in built.into_iter().zip(keep) {
        if k {
            kept.push(c);
        } else {
            implied.push(c);
        }
    }
    (kept, implied)
}

fn combinations(items: &[GroupId], k: usize) -> Result<Vec<Vec<GroupId>>> {
    if k > items.len() {
        return Ok(Vec::new());
    }
    if k == items.len() {
        return Ok(vec![items.to_vec()]);
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        if out.len() > MAX_OPTIONS {
            return Err(Error::param(format!(
                "choosing {k} of {} groups exceeds {MAX_OPTIONS} options",
                items.len()
            )));
        }
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] != i + items.len() - k {
                break;
            }
            if i == 0 && idx[0] == items.len() - k {
                return Ok(out);
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn grid_of(requests: &[RequestRecord], segments: &[Segment]) -> Result<AlphaGrid> {
    if let Some((_, r)) = segments.first().and_then(|s| s.per_group_remaining.first()) {
        return Ok(r.grid().clone());
    }
    requests
        .first()
        .map(|r| r.cost.grid().clone())
        .ok_or_else(|| Error::param("cannot infer the alpha grid of an empty problem"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate_subsets() {
        let c = combinations(&[1, 2, 3, 4], 2).unwrap();
        assert_eq!(c.len(), 6);
        assert_eq!(c[0], vec![1, 2]);
        assert_eq!(c[5], vec![3, 4]);
        assert_eq!(combinations(&[1, 2], 2).unwrap(), vec![vec![1, 2]]);
        assert_eq!(combinations(&[1, 2, 3], 1).unwrap().len(), 3);
        assert_eq!(combinations(&[1, 2, 3], 0).unwrap(), vec![Vec::<GroupId>::new()]);
        assert!(combinations(&[1], 2).unwrap().is_empty());
    }

    #[test]
    fn objective_modes_parse() {
        assert_eq!("request-count".parse::<ObjectiveMode>().unwrap(), ObjectiveMode::RequestCount);
        assert_eq!(ObjectiveMode::Utility.to_string(), "utility");
        assert!("value".parse::<ObjectiveMode>().is_err());
    }
}
