use std::collections::{BTreeSet, HashMap, HashSet};

use super::RequestRecord;
use crate::error::Result;
use crate::exec::Exec;
use crate::population::{GroupId, Population};
use crate::rdp::RdpVector;

/// Maximal set of cells demanded by an identical set of requests.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Ids of the requests demanding the segment, ascending.
    pub signature: Vec<u64>,
    /// Batch positions of the same requests, ascending.
    pub members: Vec<usize>,
    /// Half-open cell ranges, ascending and non-adjacent.
    pub cells: Vec<(u32, u32)>,
    /// Remaining budgets of the segment's cells per active group, in window
    /// order. A group has one entry per distinct remaining budget that no
    /// other cell's undercuts at every order, so a single entry whenever one
    /// cell is the tightest at all orders.
    pub per_group_remaining: Vec<(GroupId, RdpVector)>,
}

impl Segment {
    pub fn cell_count(&self) -> u32 {
        self.cells.iter().map(|(a, b)| b - a).sum()
    }

    pub fn cell_iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.cells.iter().flat_map(|(a, b)| *a..*b)
    }

    pub fn remaining_for(&self, group: GroupId) -> impl Iterator<Item = &RdpVector> + '_ {
        self.per_group_remaining
            .iter()
            .filter(move |(g, _)| *g == group)
            .map(|(_, r)| r)
    }
}

pub fn compute_segments(requests: &[RequestRecord], population: &Population) -> Result<Vec<Segment>> {
    compute_segments_with(Exec::available(), requests, population)
}

/// Groups every demanded cell by the exact set of requests demanding it and
/// attaches per-group remaining budgets. Runs a sweep over the predicates'
/// range endpoints, so cost is independent of the domain size.
pub fn compute_segments_with(
    exec: Exec,
    requests: &[RequestRecord],
    population: &Population,
) -> Result<Vec<Segment>> {
    let domain = population.schema.domain_size;
    let mut events: Vec<(u32, bool, usize)> = Vec::new();
    for (idx, r) in requests.iter().enumerate() {
        r.validate(domain)?;
        for (a, b) in r.predicate.ranges(domain) {
            events.push((a, true, idx));
            events.push((b, false, idx));
        }
    }
    events.sort_unstable();

    let mut by_signature: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut raw: Vec<(Vec<usize>, Vec<(u32, u32)>)> = Vec::new();
    let mut active: BTreeSet<usize> = BTreeSet::new();
    let mut i = 0;
    while i < events.len() {
        let pos = events[i].0;
        while i < events.len() && events[i].0 == pos {
            let (_, open, idx) = events[i];
            if open {
                active.insert(idx);
            } else {
                active.remove(&idx);
            }
            i += 1;
        }
        let Some(&(next, _, _)) = events.get(i) else { break };
        if active.is_empty() || next == pos {
            continue;
        }
        let key: Vec<usize> = active.iter().copied().collect();
        let slot = *by_signature.entry(key.clone()).or_insert_with(|| {
            raw.push((key, Vec::new()));
            raw.len() - 1
        });
        let ranges = &mut raw[slot].1;
        match ranges.last_mut() {
            Some(last) if last.1 == pos => last.1 = next,
            _ => ranges.push((pos, next)),
        }
    }

    let groups = population.active_ids();
    exec.map(&raw, |(members, cells)| -> Result<Segment> {
        let mut per_group_remaining = Vec::with_capacity(groups.len());
        for &g in &groups {
            for rem in tightest_remaining(population, g, cells)? {
                per_group_remaining.push((g, rem));
            }
        }
        let mut signature: Vec<u64> = members.iter().map(|m| requests[*m].request_id).collect();
        signature.sort_unstable();
        Ok(Segment {
            signature,
            members: members.clone(),
            cells: cells.clone(),
            per_group_remaining,
        })
    })
    .into_iter()
    .collect()
}

/// `unlocked - consumed` for every distinct consumption among the cells that
/// no other cell's consumption reaches at every order. Untouched cells count
/// as unconsumed.
fn tightest_remaining(population: &Population, group: GroupId, cells: &[(u32, u32)]) -> Result<Vec<RdpVector>> {
    let g = population.group(group).expect("active group");
    let unlocked = population.policy.unlocked(g.rounds_active)?;
    let zero = RdpVector::zeros(unlocked.grid());
    let total: u64 = cells.iter().map(|(a, b)| (b - a) as u64).sum();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut distinct: Vec<&RdpVector> = Vec::new();
    let mut materialized = 0u64;
    for (a, b) in cells {
        for ledger in g.blocks.range(*a..*b).map(|(_, l)| l) {
            materialized += 1;
            if seen.insert(ledger.consumed.values().iter().map(|v| v.to_bits()).collect()) {
                distinct.push(&ledger.consumed);
            }
        }
    }
    if materialized < total && seen.insert(zero.values().iter().map(|v| v.to_bits()).collect()) {
        distinct.push(&zero);
    }
    let covers = |a: &RdpVector, b: &RdpVector| a.values().iter().zip(b.values()).all(|(x, y)| x >= y);
    distinct
        .iter()
        .enumerate()
        .filter(|(i, c)| !distinct.iter().enumerate().any(|(j, d)| j != *i && covers(d, c)))
        .map(|(_, c)| unlocked.remaining(c))
        .collect()
}
