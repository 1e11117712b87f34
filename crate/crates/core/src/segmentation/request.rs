use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::GroupId;
use crate::rdp::{MechanismSpec, RdpVector};
use crate::workload::Tier;

/// Attribute-cell selection over the flattened domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Predicate {
    /// `len` consecutive cells starting at `start`, wrapping at the domain end.
    Interval { start: u32, len: u32 },
    /// Arbitrary selection, sorted and deduplicated.
    Cells { cells: Vec<u32> },
}

impl Predicate {
    pub fn interval(start: u32, len: u32) -> Self {
        Predicate::Interval { start, len }
    }

    pub fn cells(mut cells: Vec<u32>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Predicate::Cells { cells }
    }

    pub fn full(domain_size: u32) -> Self {
        Predicate::Interval {
            start: 0,
            len: domain_size,
        }
    }

    pub fn validate(&self, domain_size: u32) -> Result<()> {
        match self {
            Predicate::Interval { start, len } => {
                if *len == 0 || *len > domain_size || *start >= domain_size {
                    return Err(Error::param(format!(
                        "interval (start {start}, len {len}) invalid for domain {domain_size}"
                    )));
                }
            }
            Predicate::Cells { cells } => {
                if cells.is_empty() {
                    return Err(Error::param("cell selection must not be empty"));
                }
                if cells.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::param("cell selection must be sorted and unique"));
                }
                if cells.last().is_some_and(|c| *c >= domain_size) {
                    return Err(Error::param("cell selection exceeds domain"));
                }
            }
        }
        Ok(())
    }

    /// Half-open, non-wrapping, ascending cell ranges.
    pub fn ranges(&self, domain_size: u32) -> Vec<(u32, u32)> {
        match self {
            Predicate::Interval { start, len } => {
                if *len >= domain_size {
                    vec![(0, domain_size)]
                } else if start + len <= domain_size {
                    vec![(*start, start + len)]
                } else {
                    let mut r = vec![(0, start + len - domain_size), (*start, domain_size)];
                    r.sort_unstable();
                    r
                }
            }
            Predicate::Cells { cells } => {
                let mut out: Vec<(u32, u32)> = Vec::new();
                for &c in cells {
                    match out.last_mut() {
                        Some(last) if last.1 == c => last.1 = c + 1,
                        _ => out.push((c, c + 1)),
                    }
                }
                out
            }
        }
    }

    pub fn cell_count(&self, domain_size: u32) -> u32 {
        self.ranges(domain_size).iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, cell: u32, domain_size: u32) -> bool {
        self.ranges(domain_size).iter().any(|(a, b)| (*a..*b).contains(&cell))
    }
}

/// Which active groups a request draws its data from.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupDemand {
    /// Candidate groups; `None` means every active group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eligible: Option<Vec<GroupId>>,
    /// Number of groups that must be assigned; `None` means all eligible ones.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required: Option<u32>,
}

impl GroupDemand {
    pub fn all() -> Self {
        GroupDemand::default()
    }

    pub fn exactly(groups: Vec<GroupId>) -> Self {
        GroupDemand {
            eligible: Some(groups),
            required: None,
        }
    }

    pub fn any_of(groups: Vec<GroupId>, required: u32) -> Self {
        GroupDemand {
            eligible: Some(groups),
            required: Some(required),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub request_id: u64,
    pub predicate: Predicate,
    /// Poisson inclusion probability, or the selected fraction of groups
    /// under user-parallel accounting.
    pub sample_fraction: f64,
    /// Per-block charge when accepted.
    pub cost: RdpVector,
    pub weight: f64,
    pub utility: f64,
    /// Minutes since the start of the simulation.
    pub arrival_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mechanism: Option<MechanismSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    #[serde(default)]
    pub groups: GroupDemand,
}

impl RequestRecord {
    /// Minimal record with unit weight, zero utility and all active groups.
    pub fn new(request_id: u64, predicate: Predicate, cost: RdpVector) -> Self {
        RequestRecord {
            request_id,
            predicate,
            sample_fraction: 1.0,
            cost,
            weight: 1.0,
            utility: 0.0,
            arrival_time: request_id as f64,
            mechanism: None,
            tier: None,
            groups: GroupDemand::all(),
        }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_utility(mut self, utility: f64) -> Self {
        self.utility = utility;
        self
    }

    pub fn with_arrival(mut self, arrival_time: f64) -> Self {
        self.arrival_time = arrival_time;
        self
    }

    pub fn with_groups(mut self, groups: GroupDemand) -> Self {
        self.groups = groups;
        self
    }

    pub fn validate(&self, domain_size: u32) -> Result<()> {
        self.predicate.validate(domain_size)?;
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::param(format!(
                "request {}: sample fraction must be in (0, 1], got {}",
                self.request_id, self.sample_fraction
            )));
        }
        if !(self.weight >= 0.0 && self.utility >= 0.0) {
            return Err(Error::param(format!(
                "request {}: weight and utility must be >= 0",
                self.request_id
            )));
        }
        if self.cost.values().iter().any(|e| *e < 0.0) {
            return Err(Error::param(format!("request {}: negative cost", self.request_id)));
        }
        if let (Some(eligible), Some(required)) = (&self.groups.eligible, self.groups.required) {
            if required as usize > eligible.len() || required == 0 {
                return Err(Error::param(format!(
                    "request {}: needs {required} of {} eligible groups",
                    self.request_id,
                    eligible.len()
                )));
            }
        }
        Ok(())
    }
}
