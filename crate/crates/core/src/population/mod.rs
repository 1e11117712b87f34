//! User groups, the sliding activation window, budget unlocking and
//! per-block consumption ledgers.
//!
//! Group ids are activation rounds: group `g` becomes the newest active group
//! in round `g` and retires after round `g + K - 1`. A warm window starts with
//! groups `-(K-1)..=0`, so every position is occupied from the first round on.
//! A cold window starts with group 0 alone and fills up over `K` rounds.

mod ledger;
mod rotation;
mod unlock;

pub use ledger::{BlockLedger, Charge};
pub use rotation::{assign_group, Group, GroupId, Population, RotationConfig, WindowStart};
pub use unlock::{unlock_fraction, unlocked_budget, window_closed_form, UnlockPolicy};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flattened partitioning-attribute domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub domain_size: u32,
}

impl AttributeSchema {
    pub fn new(domain_size: u32) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::param("attribute domain must contain at least one cell"));
        }
        Ok(AttributeSchema { domain_size })
    }
}
