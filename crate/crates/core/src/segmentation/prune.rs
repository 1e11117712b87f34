use std::collections::BTreeMap;

use super::{RequestRecord, Segment};
use crate::error::Result;
use crate::population::GroupId;
use crate::rdp::{filter_admits, RdpVector};

/// A budget constraint: one segment within one active group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintKey {
    pub segment: usize,
    /// Index into the segment's `per_group_remaining`.
    pub entry: usize,
    pub group: GroupId,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Contested {
    pub contested: Vec<ConstraintKey>,
    pub uncontested: Vec<ConstraintKey>,
}

impl Contested {
    /// Segments with at least one contested group constraint.
    pub fn contested_segments(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.contested.iter().map(|k| k.segment).collect();
        s.dedup();
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneOutcome {
    /// Batch positions of requests touching no contested constraint.
    pub auto_accept: Vec<usize>,
    /// Batch positions of requests that cannot fit even alone.
    pub auto_reject: Vec<usize>,
    /// Batch positions left for the optimizer.
    pub residual: Vec<usize>,
    /// Contested constraints among the residual requests, with budgets net
    /// of the auto-accepted charges.
    pub contested: BTreeMap<ConstraintKey, RdpVector>,
}

pub(crate) fn groups_of(r: &RequestRecord, all: &[GroupId]) -> Vec<GroupId> {
    match &r.groups.eligible {
        Some(e) => e.iter().copied().filter(|g| all.contains(g)).collect(),
        None => all.to_vec(),
    }
}

pub(crate) fn request_segments(segments: &[Segment], n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); n];
    for (s, seg) in segments.iter().enumerate() {
        for &m in &seg.members {
            out[m].push(s);
        }
    }
    out
}

pub(crate) fn active_groups(segments: &[Segment]) -> Vec<GroupId> {
    let mut groups: Vec<GroupId> = segments
        .first()
        .map(|s| s.per_group_remaining.iter().map(|(g, _)| *g).collect())
        .unwrap_or_default();
    groups.dedup();
    groups
}

fn classify_live(segments: &[Segment], requests: &[RequestRecord], live: &[bool]) -> Result<Contested> {
    let groups = active_groups(segments);
    let mut out = Contested::default();
    for (s, seg) in segments.iter().enumerate() {
        for (entry, (g, remaining)) in seg.per_group_remaining.iter().enumerate() {
            let mut total: Option<RdpVector> = None;
            for &m in &seg.members {
                let r = &requests[m];
                if !live[m] || !groups_of(r, &groups).contains(g) {
                    continue;
                }
                match &mut total {
                    None => total = Some(r.cost.clone()),
                    Some(t) => t.compose_assign(&r.cost)?,
                }
            }
            let Some(total) = total else { continue };
            let key = ConstraintKey {
                segment: s,
                entry,
                group: *g,
            };
            let zero = RdpVector::zeros(remaining.grid());
            if filter_admits(&zero, &total, remaining)? {
                out.uncontested.push(key);
            } else {
                out.contested.push(key);
            }
        }
    }
    Ok(out)
}

/// Splits the (segment, group) constraints into contested ones, where the
/// sum of all demanding requests fits at no order, and the rest.
pub fn classify_contested(segments: &[Segment], requests: &[RequestRecord]) -> Result<Contested> {
    classify_live(segments, requests, &vec![true; requests.len()])
}

/// Removes requests whose outcome is already decided. Solo violations are
/// rejected first, since dropping them can turn a constraint uncontested.
pub fn prune(requests: &[RequestRecord], segments: &[Segment]) -> Result<PruneOutcome> {
    let groups = active_groups(segments);
    let req_segs = request_segments(segments, requests.len());
    let mut live: Vec<bool> = req_segs.iter().map(|s| !s.is_empty()).collect();
    let mut rejected = vec![false; requests.len()];

    let fits_alone = |r: &RequestRecord, s: usize, g: GroupId| -> Result<bool> {
        for rem in segments[s].remaining_for(g) {
            if !filter_admits(&RdpVector::zeros(rem.grid()), &r.cost, rem)? {
                return Ok(false);
            }
        }
        Ok(true)
    };

    for (i, r) in requests.iter().enumerate() {
        if !live[i] {
            continue;
        }
        let candidates = groups_of(r, &groups);
        let mut feasible_groups = 0usize;
        for &g in &candidates {
            let mut ok = true;
            for &s in &req_segs[i] {
                if !fits_alone(r, s, g)? {
                    ok = false;
                    break;
                }
            }
            feasible_groups += ok as usize;
        }
        let needed = r.groups.required.map_or(candidates.len(), |n| n as usize);
        if feasible_groups < needed || candidates.is_empty() {
            rejected[i] = true;
            live[i] = false;
        }
    }

    let contested = classify_live(segments, requests, &live)?;
    let contested_set: std::collections::HashSet<(usize, GroupId)> =
        contested.contested.iter().map(|k| (k.segment, k.group)).collect();

    let mut out = PruneOutcome::default();
    for (i, r) in requests.iter().enumerate() {
        if rejected[i] {
            out.auto_reject.push(i);
            continue;
        }
        if !live[i] {
            // selects nothing: no constraint can bind it
            out.auto_accept.push(i);
            continue;
        }
        let touches_contested = groups_of(r, &groups).iter().any(|&g| {
            req_segs[i]
                .iter()
                .any(|&s| contested_set.contains(&(s, g)))
        });
        if touches_contested {
            out.residual.push(i);
        } else {
            out.auto_accept.push(i);
        }
    }

    for key in contested.contested {
        let mut budget = segments[key.segment].per_group_remaining[key.entry].1.clone();
        for &i in &out.auto_accept {
            if req_segs[i].contains(&key.segment) && groups_of(&requests[i], &groups).contains(&key.group) {
                budget = budget.remaining(&requests[i].cost)?;
            }
        }
        out.contested.insert(key, budget);
    }
    Ok(out)
}
