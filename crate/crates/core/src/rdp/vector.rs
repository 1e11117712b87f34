use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Slack allowed when comparing a composed load against a budget. Budgets
/// are often computed as `unlocked - consumed` and then re-added, which can
/// overshoot by a few ulps.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;

#[inline]
pub(crate) fn fits(load: f64, budget: f64) -> bool {
    load <= budget + FEASIBILITY_TOLERANCE * budget.abs().max(1.0)
}

/// Ordered set of Rényi orders tracked by every vector in a deployment.
#[derive(Clone, PartialEq)]
pub struct AlphaGrid(Arc<[f64]>);

impl AlphaGrid {
    pub fn new(orders: Vec<f64>) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::param("alpha grid must not be empty"));
        }
        for w in orders.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::param(format!(
                    "alpha grid must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(bad) = orders.iter().find(|a| !(a.is_finite() && **a > 1.0)) {
            return Err(Error::param(format!("alpha order {bad} must be finite and > 1")));
        }
        Ok(AlphaGrid(orders.into()))
    }

    /// `{1.5, 1.75, 2, 2.5, 3, 4, 5, 6, 8, 16, 32, 64, 1e6, 1e10}`
    pub fn standard() -> Self {
        AlphaGrid::new(vec![
            1.5, 1.75, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 8.0, 16.0, 32.0, 64.0, 1e6, 1e10,
        ])
        .expect("standard grid is valid")
    }

    pub fn orders(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn position(&self, alpha: f64) -> Option<usize> {
        self.0.iter().position(|a| *a == alpha)
    }

    pub fn same(&self, other: &AlphaGrid) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }

    pub(crate) fn ensure_same(&self, other: &AlphaGrid) -> Result<()> {
        if self.same(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self, other)))
        }
    }
}

impl fmt::Debug for AlphaGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Serialize for AlphaGrid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AlphaGrid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let orders = Vec::<f64>::deserialize(d)?;
        AlphaGrid::new(orders).map_err(serde::de::Error::custom)
    }
}

/// Per-order RDP cost or budget.
///
/// An entry equal to [`RdpVector::INFEASIBLE`] marks an order that cannot be
/// used: it absorbs every arithmetic operation and is skipped by the filter.
/// Costs are non-negative; remaining-budget views produced by
/// [`RdpVector::remaining`] may go negative at orders that are no longer active.
#[derive(Clone, PartialEq)]
pub struct RdpVector {
    grid: AlphaGrid,
    eps: Vec<f64>,
}

impl RdpVector {
    pub const INFEASIBLE: f64 = f64::INFINITY;

    /// Builds a cost vector. Entries must be non-negative or the marker.
    pub fn new(grid: &AlphaGrid, eps: Vec<f64>) -> Result<Self> {
        if eps.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "vector has {} entries, grid has {} orders",
                eps.len(),
                grid.len()
            )));
        }
        if let Some(bad) = eps.iter().find(|e| e.is_nan() || **e < 0.0) {
            return Err(Error::param(format!("rdp entries must be >= 0, got {bad}")));
        }
        Ok(RdpVector {
            grid: grid.clone(),
            eps,
        })
    }

    /// Like [`RdpVector::new`] but allows negative finite entries.
    pub fn new_signed(grid: &AlphaGrid, eps: Vec<f64>) -> Result<Self> {
        if eps.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "vector has {} entries, grid has {} orders",
                eps.len(),
                grid.len()
            )));
        }
        if eps.iter().any(|e| e.is_nan() || *e == f64::NEG_INFINITY) {
            return Err(Error::param("rdp entries must not be NaN or -inf"));
        }
        Ok(RdpVector {
            grid: grid.clone(),
            eps,
        })
    }

    pub fn zeros(grid: &AlphaGrid) -> Self {
        RdpVector {
            grid: grid.clone(),
            eps: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &AlphaGrid, f: impl Fn(f64) -> f64) -> Self {
        RdpVector {
            grid: grid.clone(),
            eps: grid.orders().iter().map(|a| f(*a)).collect(),
        }
    }

    pub fn grid(&self) -> &AlphaGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.eps[idx]
    }

    pub fn at_order(&self, alpha: f64) -> Option<f64> {
        self.grid.position(alpha).map(|i| self.eps[i])
    }

    pub fn is_marked(&self, idx: usize) -> bool {
        self.eps[idx] == Self::INFEASIBLE
    }

    pub fn is_zero(&self) -> bool {
        self.eps.iter().all(|e| *e == 0.0)
    }

    /// Element-wise sum; the marker absorbs.
    pub fn compose(&self, other: &RdpVector) -> Result<RdpVector> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn compose_assign(&mut self, other: &RdpVector) -> Result<()> {
        self.grid.ensure_same(&other.grid)?;
        for (a, b) in self.eps.iter_mut().zip(&other.eps) {
            *a = absorb(*a, *b, |x, y| x + y);
        }
        Ok(())
    }

    /// `self - used`, for remaining-budget views. The marker absorbs.
    pub fn remaining(&self, used: &RdpVector) -> Result<RdpVector> {
        self.grid.ensure_same(&used.grid)?;
        Ok(self.zip_with(used, |a, b| a - b))
    }

    /// Element-wise minimum where a marked order stays marked.
    pub fn min_with(&self, other: &RdpVector) -> Result<RdpVector> {
        self.grid.ensure_same(&other.grid)?;
        Ok(self.zip_with(other, f64::min))
    }

    pub fn scale(&self, factor: f64) -> RdpVector {
        RdpVector {
            grid: self.grid.clone(),
            eps: self
                .eps
                .iter()
                .map(|e| if *e == Self::INFEASIBLE { *e } else { e * factor })
                .collect(),
        }
    }

    /// True when `self[a] <= other[a]` at every order, treating a marked
    /// entry as larger than any value.
    pub fn dominated_by(&self, other: &RdpVector) -> bool {
        self.eps.iter().zip(&other.eps).all(|(a, b)| {
            if *b == Self::INFEASIBLE {
                true
            } else {
                *a != Self::INFEASIBLE && a <= b
            }
        })
    }

    fn zip_with(&self, other: &RdpVector, op: impl Fn(f64, f64) -> f64) -> RdpVector {
        RdpVector {
            grid: self.grid.clone(),
            eps: self
                .eps
                .iter()
                .zip(&other.eps)
                .map(|(a, b)| absorb(*a, *b, &op))
                .collect(),
        }
    }
}

#[inline]
fn absorb(a: f64, b: f64, op: impl Fn(f64, f64) -> f64) -> f64 {
    if a == RdpVector::INFEASIBLE || b == RdpVector::INFEASIBLE {
        RdpVector::INFEASIBLE
    } else {
        op(a, b)
    }
}

impl fmt::Debug for RdpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_map();
        for (a, e) in self.grid.orders().iter().zip(&self.eps) {
            if *e == Self::INFEASIBLE {
                list.entry(a, &"infeasible");
            } else {
                list.entry(a, e);
            }
        }
        list.finish()
    }
}

#[derive(Serialize, Deserialize)]
struct RdpVectorRepr {
    alphas: AlphaGrid,
    /// `null` encodes the infeasible marker.
    eps: Vec<Option<f64>>,
}

impl Serialize for RdpVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RdpVectorRepr {
            alphas: self.grid.clone(),
            eps: self
                .eps
                .iter()
                .map(|e| (*e != Self::INFEASIBLE).then_some(*e))
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RdpVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = RdpVectorRepr::deserialize(d)?;
        let eps = repr
            .eps
            .into_iter()
            .map(|e| e.unwrap_or(RdpVector::INFEASIBLE))
            .collect();
        RdpVector::new_signed(&repr.alphas, eps).map_err(serde::de::Error::custom)
    }
}

/// Privacy filter check: true iff some order keeps `consumed + candidate`
/// within `budget`. Orders marked in any operand are skipped.
pub fn filter_admits(consumed: &RdpVector, candidate: &RdpVector, budget: &RdpVector) -> Result<bool> {
    Ok(admitting_order(consumed, candidate, budget)?.is_some())
}

/// First order index that admits the charge, if any.
pub fn admitting_order(
    consumed: &RdpVector,
    candidate: &RdpVector,
    budget: &RdpVector,
) -> Result<Option<usize>> {
    consumed.grid.ensure_same(&candidate.grid)?;
    consumed.grid.ensure_same(&budget.grid)?;
    Ok((0..budget.len()).find(|&i| {
        let (c, x, b) = (consumed.eps[i], candidate.eps[i], budget.eps[i]);
        c != RdpVector::INFEASIBLE
            && x != RdpVector::INFEASIBLE
            && b != RdpVector::INFEASIBLE
            && fits(c + x, b)
    }))
}
