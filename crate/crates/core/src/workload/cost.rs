use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::Result;
use crate::rdp::{amplify, mechanism_curve, AlphaGrid, MechanismCurve, MechanismKind, MechanismSpec, RdpVector};

type CurveKey = (MechanismKind, u64, u64, u32);
type CostKey = (CurveKey, u64);

/// Memoized mechanism calibration and amplification on one grid. Workloads
/// repeat a handful of (spec, fraction) pairs, and calibrating a Gaussian is
/// a bisection. Shareable across threads.
#[derive(Debug)]
pub struct CostModel {
    grid: AlphaGrid,
    curves: Mutex<HashMap<CurveKey, MechanismCurve>>,
    costs: Mutex<HashMap<CostKey, Arc<RdpVector>>>,
}

fn curve_key(spec: &MechanismSpec) -> CurveKey {
    (
        spec.kind,
        spec.target_epsilon.to_bits(),
        spec.target_delta.to_bits(),
        spec.repetitions,
    )
}

impl CostModel {
    pub fn new(grid: AlphaGrid) -> Self {
        CostModel {
            grid,
            curves: Mutex::new(HashMap::new()),
            costs: Mutex::new(HashMap::new()),
        }
    }

    pub fn grid(&self) -> &AlphaGrid {
        &self.grid
    }

    pub fn curve(&self, spec: &MechanismSpec) -> Result<MechanismCurve> {
        let key = curve_key(spec);
        if let Some(c) = self.curves.lock().expect("poisoned").get(&key) {
            return Ok(*c);
        }
        let c = mechanism_curve(spec, &self.grid)?;
        self.curves.lock().expect("poisoned").insert(key, c);
        Ok(c)
    }

    /// Per-block charge of the mechanism run on a Poisson sample of rate
    /// `gamma`; `gamma = 1` is the plain curve.
    pub fn amplified(&self, spec: &MechanismSpec, gamma: f64) -> Result<Arc<RdpVector>> {
        let key = (curve_key(spec), gamma.to_bits());
        if let Some(c) = self.costs.lock().expect("poisoned").get(&key) {
            return Ok(Arc::clone(c));
        }
        let curve = self.curve(spec)?;
        let v = Arc::new(if gamma == 1.0 {
            curve.on_grid(&self.grid)
        } else {
            amplify(&curve, gamma, &self.grid)?
        });
        self.costs.lock().expect("poisoned").insert(key, Arc::clone(&v));
        Ok(v)
    }

    pub fn unamplified(&self, spec: &MechanismSpec) -> Result<Arc<RdpVector>> {
        self.amplified(spec, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cached_values_match_direct_computation() {
        let g = AlphaGrid::standard();
        let m = CostModel::new(g.clone());
        let spec = MechanismSpec::new(MechanismKind::GaussianMechanism, 0.2, 1e-9);
        let a = m.amplified(&spec, 0.25).unwrap();
        let b = m.amplified(&spec, 0.25).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
        assert_eq!(*a, amplify(&mechanism_curve(&spec, &g).unwrap(), 0.25, &g).unwrap());
        let full = m.unamplified(&spec).unwrap();
        assert!(a.dominated_by(&full));
    }
}
