use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::population::GroupId;
use crate::rdp::RdpVector;
use crate::segmentation::{GroupDemand, Predicate, RequestRecord};

/// Rounds to the nearest integer with halves going up.
pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

/// Groups charged by a request of fraction `f` under user-level parallel
/// composition: `f·n` rounded half up, at least one.
pub fn upc_group_count(fraction: f64, n_groups: usize) -> usize {
    (round_half_up(fraction * n_groups as f64) as usize).clamp(1, n_groups.max(1))
}

/// Baseline accounting: the request charges its unamplified cost to a
/// random `fraction` of the active groups over the whole attribute domain.
pub fn to_upc<R: Rng + ?Sized>(
    record: &RequestRecord,
    unamplified: RdpVector,
    active: &[GroupId],
    domain_size: u32,
    rng: &mut R,
) -> Result<RequestRecord> {
    if active.is_empty() {
        return Err(Error::param("no active groups"));
    }
    let k = upc_group_count(record.sample_fraction, active.len());
    let mut groups: Vec<GroupId> = sample(rng, active.len(), k).into_iter().map(|i| active[i]).collect();
    groups.sort_unstable();
    let mut out = record.clone();
    out.predicate = Predicate::full(domain_size);
    out.cost = unamplified;
    out.groups = GroupDemand::exactly(groups);
    Ok(out)
}
