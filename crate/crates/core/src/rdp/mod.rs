//! Rényi-DP accounting: cost curves, notion conversions, composition,
//! Poisson-subsampling amplification and the per-block filter check.

mod amplify;
mod mechanism;
mod vector;

pub use amplify::{
    amplify, amplify_poisson_gaussian, amplify_poisson_generic, amplify_poisson_generic_with,
    AmplificationParams, BaseKind, MAX_EXPANSION_ORDER,
};
pub use mechanism::{
    calibrate_gaussian_sigma, gaussian_rdp, mechanism_curve, mechanism_rdp, pure_dp_to_rdp,
    zcdp_to_rdp, MechanismCurve, MechanismKind, MechanismSpec,
};
pub use vector::{admitting_order, filter_admits, AlphaGrid, RdpVector, FEASIBILITY_TOLERANCE};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global approximate-DP target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdpBudget {
    pub epsilon: f64,
    pub delta: f64,
}

impl AdpBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        let b = AdpBudget { epsilon, delta };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::param(format!("delta must be in [0, 1), got {}", self.delta)));
        }
        Ok(())
    }

    /// Per-order RDP capacity `eps - ln(1/delta)/(alpha - 1)`. Orders whose
    /// capacity would be negative carry the infeasible marker.
    pub fn to_rdp_budget(&self, grid: &AlphaGrid) -> Result<RdpVector> {
        if !(self.delta > 0.0) {
            return Err(Error::param("an RDP budget needs delta > 0"));
        }
        let log_inv_delta = (1.0 / self.delta).ln();
        Ok(RdpVector::from_fn(grid, |alpha| {
            let cap = self.epsilon - log_inv_delta / (alpha - 1.0);
            if cap < 0.0 {
                RdpVector::INFEASIBLE
            } else {
                cap
            }
        }))
    }
}

/// Converts an RDP curve to an `(eps, delta)` guarantee by minimizing
/// `eps(alpha) + ln(1/delta)/(alpha - 1)` over the grid. Returns `+inf` when
/// every order is marked.
pub fn rdp_to_adp(v: &RdpVector, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta must be in (0, 1), got {delta}")));
    }
    let log_inv_delta = (1.0 / delta).ln();
    Ok(v
        .grid()
        .orders()
        .iter()
        .zip(v.values())
        .filter(|(_, e)| **e != RdpVector::INFEASIBLE)
        .map(|(a, e)| e + log_inv_delta / (a - 1.0))
        .fold(f64::INFINITY, f64::min))
}

/// Element-wise sum of two curves on the same grid.
pub fn compose(a: &RdpVector, b: &RdpVector) -> Result<RdpVector> {
    a.compose(b)
}
