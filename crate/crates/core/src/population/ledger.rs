use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{unlocked_budget, GroupId, UnlockPolicy};
use crate::error::{Error, Result};
use crate::rdp::{admitting_order, RdpVector};

/// One admitted per-round charge. Charges are shared between the blocks of a
/// segment, hence the `Arc`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub round: i64,
    pub cost: Arc<RdpVector>,
}

/// Consumption ledger of one (group, attribute cell) block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockLedger {
    pub group_id: GroupId,
    pub attribute_cell: u32,
    pub rounds_active: u32,
    pub consumed: RdpVector,
    pub history: Vec<Charge>,
}

impl BlockLedger {
    pub fn fresh(group_id: GroupId, attribute_cell: u32, rounds_active: u32, policy: &UnlockPolicy) -> Self {
        BlockLedger {
            group_id,
            attribute_cell,
            rounds_active,
            consumed: RdpVector::zeros(policy.grid()),
            history: Vec::new(),
        }
    }

    /// Unlocked minus consumed, per order. Entries may be negative at orders
    /// that stopped admitting charges.
    pub fn available(&self, policy: &UnlockPolicy) -> Result<RdpVector> {
        unlocked_budget(self.rounds_active, policy)?.remaining(&self.consumed)
    }

    pub fn admits(&self, charge: &RdpVector, policy: &UnlockPolicy) -> Result<bool> {
        let unlocked = unlocked_budget(self.rounds_active, policy)?;
        Ok(admitting_order(&self.consumed, charge, &unlocked)?.is_some())
    }

    /// Appends the charge if the block's filter admits it; otherwise the
    /// ledger is left untouched.
    pub fn consume(&mut self, round: i64, charge: Arc<RdpVector>, policy: &UnlockPolicy) -> Result<()> {
        if !self.admits(&charge, policy)? {
            return Err(Error::BudgetExceeded {
                group: self.group_id,
                cell: self.attribute_cell,
            });
        }
        self.consumed.compose_assign(&charge)?;
        self.history.push(Charge { round, cost: charge });
        Ok(())
    }

    /// Recomputes the consumption from the history.
    pub fn replayed_consumption(&self) -> Result<RdpVector> {
        let mut acc = RdpVector::zeros(self.consumed.grid());
        for c in &self.history {
            acc.compose_assign(&c.cost)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdp::AlphaGrid;

    fn setup() -> (UnlockPolicy, AlphaGrid) {
        let g = AlphaGrid::new(vec![2.0, 8.0]).unwrap();
        let p = UnlockPolicy::new(0.4, 12, RdpVector::new(&g, vec![3.0, 3.0]).unwrap()).unwrap();
        (p, g)
    }

    fn cost(g: &AlphaGrid, e: &[f64]) -> Arc<RdpVector> {
        Arc::new(RdpVector::new(g, e.to_vec()).unwrap())
    }

    #[test]
    fn fresh_block_availability() {
        let (p, g) = setup();
        let b = BlockLedger::fresh(0, 7, 1, &p);
        let a = b.available(&p).unwrap();
        assert!((a.get(0) - 0.35).abs() < 1e-12);
        assert_eq!(a.grid(), &g);
    }

    #[test]
    fn zero_charge_only_appends_history() {
        let (p, g) = setup();
        let mut b = BlockLedger::fresh(0, 7, 1, &p);
        b.consume(0, Arc::new(RdpVector::zeros(&g)), &p).unwrap();
        assert_eq!(b.history.len(), 1);
        assert!(b.consumed.is_zero());
    }

    #[test]
    fn boundary_charge_accepted_and_excess_refused() {
        let (p, g) = setup();
        let mut b = BlockLedger::fresh(0, 7, 1, &p);
        b.consume(0, cost(&g, &[0.1, 0.2]), &p).unwrap();
        let rest = b.available(&p).unwrap();
        b.consume(0, cost(&g, &[rest.get(0), 5.0]), &p).unwrap();
        let before = b.clone();
        let err = b.consume(1, cost(&g, &[0.01, 0.5]), &p).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { group: 0, cell: 7 }));
        assert_eq!(b, before);
        assert_eq!(b.replayed_consumption().unwrap(), b.consumed);
    }
}
