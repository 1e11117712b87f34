use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Grant;
use crate::error::{Error, Result};
use crate::population::{BlockLedger, GroupId, Population};
use crate::rdp::RdpVector;
use crate::segmentation::{Predicate, RequestRecord};

/// Attribute-based access record for one accepted request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub policy_id: u64,
    pub round: i64,
    /// Subject: the requesting application.
    pub application_id: u64,
    /// Resource: groups and attribute predicate.
    pub groups: Vec<GroupId>,
    pub predicate: Predicate,
    /// Action: the granted per-block charge.
    pub granted: RdpVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub sample_fraction: f64,
}

/// Summed charge per (group, cell range) over the grants, as maximal
/// ranges of constant total.
pub fn block_charges(
    requests: &[RequestRecord],
    grants: &[Grant],
    domain_size: u32,
) -> Result<BTreeMap<GroupId, Vec<((u32, u32), RdpVector)>>> {
    let mut per_group: BTreeMap<GroupId, Vec<(u32, bool, usize)>> = BTreeMap::new();
    for (k, g) in grants.iter().enumerate() {
        let r = request(requests, g)?;
        for (a, b) in r.predicate.ranges(domain_size) {
            for &grp in &g.groups {
                let ev = per_group.entry(grp).or_default();
                ev.push((a, true, k));
                ev.push((b, false, k));
            }
        }
    }
    let mut out = BTreeMap::new();
    for (grp, mut events) in per_group {
        events.sort_unstable();
        let mut open: Vec<usize> = Vec::new();
        let mut ranges = Vec::new();
        let mut i = 0;
        while i < events.len() {
            let pos = events[i].0;
            while i < events.len() && events[i].0 == pos {
                let (_, start, k) = events[i];
                if start {
                    open.push(k);
                } else if let Some(at) = open.iter().position(|x| *x == k) {
                    open.swap_remove(at);
                }
                i += 1;
            }
            let Some(&(next, _, _)) = events.get(i) else { break };
            if open.is_empty() || next == pos {
                continue;
            }
            let mut sorted = open.clone();
            sorted.sort_unstable();
            let mut total: Option<RdpVector> = None;
            for k in sorted {
                let c = &request(requests, &grants[k])?.cost;
                match &mut total {
                    None => total = Some(c.clone()),
                    Some(t) => t.compose_assign(c)?,
                }
            }
            ranges.push(((pos, next), total.expect("non-empty")));
        }
        out.insert(grp, ranges);
    }
    Ok(out)
}

fn request<'a>(requests: &'a [RequestRecord], g: &Grant) -> Result<&'a RequestRecord> {
    requests
        .get(g.position)
        .filter(|r| r.request_id == g.request_id)
        .ok_or_else(|| Error::Conflict(format!("grant for request {} does not match the batch", g.request_id)))
}

/// Charges every block the grants touch, after checking that each block
/// admits its round total. On a failed check nothing is charged.
pub fn apply_allocation(
    population: &mut Population,
    requests: &[RequestRecord],
    grants: &[Grant],
    next_policy_id: &mut u64,
) -> Result<Vec<PolicyRecord>> {
    let domain = population.schema.domain_size;
    let charges = block_charges(requests, grants, domain)?;
    for (grp, ranges) in &charges {
        let group = population
            .group(*grp)
            .ok_or_else(|| Error::Conflict(format!("group {grp} is not active")))?;
        for ((a, b), total) in ranges {
            let mut materialized = 0u32;
            for (cell, ledger) in group.blocks.range(*a..*b) {
                materialized += 1;
                if !ledger.admits(total, &population.policy)? {
                    return Err(Error::Conflict(format!(
                        "block (group {grp}, cell {cell}) no longer admits the allocation"
                    )));
                }
            }
            if materialized < b - a {
                let fresh = BlockLedger::fresh(*grp, *a, group.rounds_active, &population.policy);
                if !fresh.admits(total, &population.policy)? {
                    return Err(Error::Conflict(format!(
                        "fresh blocks of group {grp} in cells {a}..{b} do not admit the allocation"
                    )));
                }
            }
        }
    }

    let round = population.round;
    let mut policies = Vec::with_capacity(grants.len());
    for g in grants {
        let r = request(requests, g)?;
        let cost = Arc::new(r.cost.clone());
        for &grp in &g.groups {
            for (a, b) in r.predicate.ranges(domain) {
                for cell in a..b {
                    population.consume_block(grp, cell, Arc::clone(&cost))?;
                }
            }
        }
        policies.push(PolicyRecord {
            policy_id: *next_policy_id,
            round,
            application_id: r.request_id,
            groups: g.groups.clone(),
            predicate: r.predicate.clone(),
            granted: r.cost.clone(),
            delta: r.mechanism.as_ref().map(|m| m.target_delta),
            sample_fraction: r.sample_fraction,
        });
        *next_policy_id += 1;
    }
    Ok(policies)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{AttributeSchema, RotationConfig, UnlockPolicy};
    use crate::rdp::AlphaGrid;

    fn setup() -> (Population, Vec<RequestRecord>) {
        let g = AlphaGrid::new(vec![2.0, 4.0]).unwrap();
        let policy = UnlockPolicy::new(0.0, 4, RdpVector::new(&g, vec![4.0, 4.0]).unwrap()).unwrap();
        let pop = Population::new(AttributeSchema::new(6).unwrap(), RotationConfig::new(4, 4).unwrap(), policy).unwrap();
        let cost = RdpVector::new(&g, vec![0.6, 0.6]).unwrap();
        let mut r = RequestRecord::new(7, Predicate::interval(1, 3), cost);
        r.sample_fraction = 0.25;
        (pop, vec![r])
    }

    fn all_groups(pop: &Population) -> Grant {
        Grant {
            position: 0,
            request_id: 7,
            groups: pop.active_ids(),
        }
    }

    #[test]
    fn empty_allocation_changes_nothing() {
        let (mut pop, reqs) = setup();
        let before = pop.clone();
        let mut id = 0;
        assert!(apply_allocation(&mut pop, &reqs, &[], &mut id).unwrap().is_empty());
        assert_eq!(pop, before);
        assert_eq!(id, 0);
    }

    #[test]
    fn every_demanded_block_gets_the_same_charge() {
        let (mut pop, reqs) = setup();
        let grant = all_groups(&pop);
        let mut id = 10;
        let pols = apply_allocation(&mut pop, &reqs, &[grant], &mut id).unwrap();
        assert_eq!(pols.len(), 1);
        assert_eq!(pols[0].policy_id, 10);
        assert_eq!(pols[0].sample_fraction, 0.25);
        assert_eq!(pols[0].predicate, Predicate::interval(1, 3));
        assert_eq!(id, 11);
        for g in &pop.active {
            assert_eq!(g.blocks.len(), 3);
            for (cell, b) in &g.blocks {
                assert!((1..4).contains(cell));
                assert_eq!(b.consumed, reqs[0].cost);
            }
        }
    }

    #[test]
    fn replaying_is_rejected_without_side_effects() {
        let (mut pop, reqs) = setup();
        let grant = all_groups(&pop);
        let mut id = 0;
        apply_allocation(&mut pop, &reqs, &[grant.clone()], &mut id).unwrap();
        // the newest group has 1.0 unlocked; a second 0.6 overflows it
        let snapshot = pop.clone();
        let err = apply_allocation(&mut pop, &reqs, &[grant], &mut id).unwrap_err();
        assert!(matches!(err, Error::Conflict(_)));
        assert_eq!(pop, snapshot);
        assert_eq!(id, 1);
    }

    #[test]
    fn charges_merge_overlapping_grants() {
        let (pop, mut reqs) = setup();
        let g = pop.grid().clone();
        reqs.push(RequestRecord::new(8, Predicate::interval(2, 4), RdpVector::new(&g, vec![0.1, 0.1]).unwrap()));
        let grants = vec![
            Grant { position: 0, request_id: 7, groups: vec![0] },
            Grant { position: 1, request_id: 8, groups: vec![0] },
        ];
        let ch = block_charges(&reqs, &grants, 6).unwrap();
        let view: Vec<((u32, u32), f64)> = ch[&0].iter().map(|(r, v)| (*r, v.get(0))).collect();
        assert_eq!(view.len(), 3);
        assert_eq!(view[0], ((1, 2), 0.6));
        assert_eq!(view[1].0, (2, 4));
        assert!((view[1].1 - 0.7).abs() < 1e-12);
        assert_eq!(view[2], ((4, 6), 0.1));
    }
}
