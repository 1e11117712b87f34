use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rdp::{AdpBudget, AlphaGrid, RdpVector};

/// Δ-biased unlocking: `(1 + Δ) ε/K` per round during the first half of a
/// group's window, `(1 - Δ) ε/K` during the second half.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlockPolicy {
    pub delta_slack: f64,
    pub window_k: u32,
    /// Per-order lifetime budget of a block.
    pub total_budget: RdpVector,
}

impl UnlockPolicy {
    pub fn new(delta_slack: f64, window_k: u32, total_budget: RdpVector) -> Result<Self> {
        let p = UnlockPolicy {
            delta_slack,
            window_k,
            total_budget,
        };
        p.validate()?;
        Ok(p)
    }

    /// Policy whose per-order budget is the exact inverse of the RDP to
    /// approximate-DP conversion for `budget`.
    pub fn from_adp(
        delta_slack: f64,
        window_k: u32,
        budget: &AdpBudget,
        grid: &AlphaGrid,
    ) -> Result<Self> {
        UnlockPolicy::new(delta_slack, window_k, budget.to_rdp_budget(grid)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta_slack) {
            return Err(Error::param(format!(
                "unlock slack must be in [0, 1], got {}",
                self.delta_slack
            )));
        }
        if self.window_k == 0 || self.window_k % 2 != 0 {
            return Err(Error::param(format!(
                "window size K must be positive and even, got {}",
                self.window_k
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &AlphaGrid {
        self.total_budget.grid()
    }

    pub fn unlocked(&self, k: u32) -> Result<RdpVector> {
        unlocked_budget(k, self)
    }
}

/// Cumulative fraction of the lifetime budget unlocked after `k` active rounds.
pub fn unlock_fraction(k: u32, window_k: u32, delta_slack: f64) -> f64 {
    let half_floor = window_k / 2;
    let half_ceil = window_k.div_ceil(2);
    let front = k.min(half_floor) as f64;
    let back = k.saturating_sub(half_ceil) as f64;
    if k == window_k {
        // front and back slack cancel exactly for even K
        return 1.0;
    }
    (k as f64 + delta_slack * front - delta_slack * back) / window_k as f64
}

/// Unlocked budget of a block that has been active for `k` rounds, `1 <= k <= K`.
pub fn unlocked_budget(k: u32, policy: &UnlockPolicy) -> Result<RdpVector> {
    if k == 0 || k > policy.window_k {
        return Err(Error::param(format!(
            "rounds active must be in [1, {}], got {k}",
            policy.window_k
        )));
    }
    Ok(policy
        .total_budget
        .scale(unlock_fraction(k, policy.window_k, policy.delta_slack)))
}

/// Window-level availability `min(ε - Σ c_j, (1 + Δ) ε/K)` over the last
/// `K - 1` per-round charges (scalar form).
pub fn window_closed_form(total: f64, window_k: u32, delta_slack: f64, last_charges: &[f64]) -> f64 {
    let used: f64 = last_charges.iter().sum();
    (total - used).min((1.0 + delta_slack) * total / window_k as f64)
}
