use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{AttributeSchema, BlockLedger, UnlockPolicy};
use crate::error::{Error, Result};
use crate::rdp::{AlphaGrid, RdpVector};

/// Activation round of a group.
pub type GroupId = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationConfig {
    /// Active groups per round, K.
    pub window_k: u32,
    /// Users joining in round r are spread over groups r+1..=r+T.
    pub assignment_horizon_t: u32,
}

impl RotationConfig {
    pub fn new(window_k: u32, assignment_horizon_t: u32) -> Result<Self> {
        let c = RotationConfig {
            window_k,
            assignment_horizon_t,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_k == 0 || self.window_k % 2 != 0 {
            return Err(Error::param(format!(
                "window size K must be positive and even, got {}",
                self.window_k
            )));
        }
        if self.assignment_horizon_t < self.window_k {
            return Err(Error::param(format!(
                "assignment horizon T={} must be >= K={}",
                self.assignment_horizon_t, self.window_k
            )));
        }
        Ok(())
    }
}

/// How the window looks in round 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowStart {
    /// Groups `-(K-1)..=0` are active, at every age from K down to 1.
    #[default]
    Warm,
    /// Only group 0 is active; the window fills up one group per round.
    Cold,
}

/// Group a user joining in `arrival_round` is assigned to: uniform over the
/// next `horizon_t` groups. Only the user's own draw is consulted.
pub fn assign_group<R: Rng + ?Sized>(arrival_round: GroupId, horizon_t: u32, rng: &mut R) -> GroupId {
    let horizon = horizon_t.max(1) as i64;
    arrival_round + 1 + rng.random_range(0..horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub id: GroupId,
    pub rounds_active: u32,
    pub users: u64,
    /// Materialized blocks only; untouched cells are implicitly unconsumed.
    pub blocks: BTreeMap<u32, BlockLedger>,
}

impl Group {
    fn new(id: GroupId, rounds_active: u32, users: u64) -> Self {
        Group {
            id,
            rounds_active,
            users,
            blocks: BTreeMap::new(),
        }
    }

    /// Consumption of a cell, `None` when the block was never charged.
    pub fn consumed(&self, cell: u32) -> Option<&RdpVector> {
        self.blocks.get(&cell).map(|b| &b.consumed)
    }
}

/// Rotation state plus every block ledger of the active window and the
/// residual pool of retired groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub schema: AttributeSchema,
    pub rotation: RotationConfig,
    pub policy: UnlockPolicy,
    /// Current round; the newest active group has id `round`.
    pub round: i64,
    pub active: VecDeque<Group>,
    /// Retired groups with whatever budget they had left. Never reactivated
    /// and never allocated by the planner.
    pub residual_pool: Vec<Group>,
    /// User counts assigned to groups that are not yet active.
    pub pending_users: BTreeMap<GroupId, u64>,
}

impl Population {
    pub fn new(schema: AttributeSchema, rotation: RotationConfig, policy: UnlockPolicy) -> Result<Self> {
        Self::with_start(schema, rotation, policy, WindowStart::Warm)
    }

    pub fn with_start(
        schema: AttributeSchema,
        rotation: RotationConfig,
        policy: UnlockPolicy,
        start: WindowStart,
    ) -> Result<Self> {
        rotation.validate()?;
        policy.validate()?;
        if policy.window_k != rotation.window_k {
            return Err(Error::Config(format!(
                "unlock policy uses K={} but rotation uses K={}",
                policy.window_k, rotation.window_k
            )));
        }
        let k = rotation.window_k;
        let first = match start {
            WindowStart::Warm => 0,
            WindowStart::Cold => k - 1,
        };
        let active = (first..k)
            .map(|i| {
                let id = -((k - 1 - i) as i64);
                Group::new(id, k - i, 0)
            })
            .collect();
        Ok(Population {
            schema,
            rotation,
            policy,
            round: 0,
            active,
            residual_pool: Vec::new(),
            pending_users: BTreeMap::new(),
        })
    }

    pub fn grid(&self) -> &AlphaGrid {
        self.policy.grid()
    }

    pub fn window_k(&self) -> u32 {
        self.rotation.window_k
    }

    pub fn active_ids(&self) -> Vec<GroupId> {
        self.active.iter().map(|g| g.id).collect()
    }

    pub fn group(&self, id: GroupId) -> Option<&Group> {
        self.active.iter().find(|g| g.id == id)
    }

    fn group_index(&self, id: GroupId) -> Result<usize> {
        self.active
            .iter()
            .position(|g| g.id == id)
            .ok_or_else(|| Error::param(format!("group {id} is not active in round {}", self.round)))
    }

    /// Retires the oldest group once the window is full, ages the survivors
    /// and activates the next one.
    pub fn advance_round(&mut self) {
        if self.active.len() >= self.rotation.window_k as usize {
            if let Some(oldest) = self.active.pop_front() {
                self.residual_pool.push(oldest);
            }
        }
        for g in self.active.iter_mut() {
            g.rounds_active += 1;
            for b in g.blocks.values_mut() {
                b.rounds_active = g.rounds_active;
            }
        }
        self.round += 1;
        let users = self.pending_users.remove(&self.round).unwrap_or(0);
        self.active.push_back(Group::new(self.round, 1, users));
    }

    /// Spreads `count` users joining in `arrival_round` over future groups.
    pub fn add_users<R: Rng + ?Sized>(&mut self, arrival_round: i64, count: u64, rng: &mut R) {
        let horizon = self.rotation.assignment_horizon_t;
        for _ in 0..count {
            let g = assign_group(arrival_round, horizon, rng);
            if let Some(active) = self.active.iter_mut().find(|a| a.id == g) {
                active.users += 1;
            } else {
                *self.pending_users.entry(g).or_default() += 1;
            }
        }
    }

    /// Remaining budget of a block: unlocked minus consumed.
    pub fn block_remaining(&self, id: GroupId, cell: u32) -> Result<RdpVector> {
        let g = &self.active[self.group_index(id)?];
        let unlocked = self.policy.unlocked(g.rounds_active)?;
        match g.consumed(cell) {
            Some(c) => unlocked.remaining(c),
            None => Ok(unlocked),
        }
    }

    pub fn block_admits(&self, id: GroupId, cell: u32, charge: &RdpVector) -> Result<bool> {
        let g = &self.active[self.group_index(id)?];
        match g.blocks.get(&cell) {
            Some(b) => b.admits(charge, &self.policy),
            None => BlockLedger::fresh(id, cell, g.rounds_active, &self.policy).admits(charge, &self.policy),
        }
    }

    /// Charges one block, materializing its ledger on first use.
    pub fn consume_block(&mut self, id: GroupId, cell: u32, charge: Arc<RdpVector>) -> Result<()> {
        if cell >= self.schema.domain_size {
            return Err(Error::param(format!(
                "cell {cell} outside domain of size {}",
                self.schema.domain_size
            )));
        }
        let idx = self.group_index(id)?;
        let round = self.round;
        let policy = &self.policy;
        let g = &mut self.active[idx];
        let k = g.rounds_active;
        match g.blocks.get_mut(&cell) {
            Some(b) => b.consume(round, charge, policy),
            None => {
                let mut b = BlockLedger::fresh(id, cell, k, policy);
                b.consume(round, charge, policy)?;
                g.blocks.insert(cell, b);
                Ok(())
            }
        }
    }

    /// Window-level availability of one cell: element-wise minimum of the
    /// remaining budget over all active groups.
    pub fn window_available(&self, cell: u32) -> Result<RdpVector> {
        let mut acc: Option<RdpVector> = None;
        for g in &self.active {
            let r = self.block_remaining(g.id, cell)?;
            acc = Some(match acc {
                None => r,
                Some(a) => a.min_with(&r)?,
            });
        }
        Ok(acc.expect("window is never empty"))
    }

    /// Every ledger ever materialized, active or retired.
    pub fn all_ledgers(&self) -> impl Iterator<Item = &BlockLedger> {
        self.active
            .iter()
            .chain(self.residual_pool.iter())
            .flat_map(|g| g.blocks.values())
    }
}
