use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{rdp_to_adp, AlphaGrid, RdpVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MechanismKind {
    #[serde(rename = "GM")]
    GaussianMechanism,
    #[serde(rename = "LM")]
    LaplaceMechanism,
    #[serde(rename = "SVT")]
    SparseVectorTechnique,
    #[serde(rename = "RR")]
    RandomizedResponse,
    #[serde(rename = "NSGD")]
    NoisySgd,
    #[serde(rename = "PATE")]
    Pate,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 6] = [
        MechanismKind::GaussianMechanism,
        MechanismKind::LaplaceMechanism,
        MechanismKind::SparseVectorTechnique,
        MechanismKind::RandomizedResponse,
        MechanismKind::NoisySgd,
        MechanismKind::Pate,
    ];

    /// Mechanisms costed through a calibrated Gaussian.
    pub fn is_gaussian(self) -> bool {
        matches!(
            self,
            MechanismKind::GaussianMechanism | MechanismKind::NoisySgd | MechanismKind::Pate
        )
    }

    pub fn short_name(self) -> &'static str {
        match self {
            MechanismKind::GaussianMechanism => "GM",
            MechanismKind::LaplaceMechanism => "LM",
            MechanismKind::SparseVectorTechnique => "SVT",
            MechanismKind::RandomizedResponse => "RR",
            MechanismKind::NoisySgd => "NSGD",
            MechanismKind::Pate => "PATE",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.short_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown mechanism kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    pub target_epsilon: f64,
    pub target_delta: f64,
    #[serde(default = "one")]
    pub repetitions: u32,
}

fn one() -> u32 {
    1
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, target_epsilon: f64, target_delta: f64) -> Self {
        MechanismSpec {
            kind,
            target_epsilon,
            target_delta,
            repetitions: 1,
        }
    }

    pub fn with_repetitions(mut self, repetitions: u32) -> Self {
        self.repetitions = repetitions;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_epsilon > 0.0 && self.target_epsilon.is_finite()) {
            return Err(Error::param(format!(
                "target epsilon must be > 0, got {}",
                self.target_epsilon
            )));
        }
        if !(0.0..1.0).contains(&self.target_delta) {
            return Err(Error::param(format!(
                "target delta must be in [0, 1), got {}",
                self.target_delta
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::param("repetitions must be >= 1"));
        }
        Ok(())
    }
}

/// Closed-form RDP curve of a calibrated mechanism, evaluable at any order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MechanismCurve {
    /// `repetitions`-fold composition of a sensitivity-1 Gaussian with noise `sigma`.
    Gaussian { sigma: f64, repetitions: u32 },
    /// Pure `eps`-DP mechanism.
    PureDp { eps: f64 },
}

impl MechanismCurve {
    pub fn eval(&self, alpha: f64) -> f64 {
        match *self {
            MechanismCurve::Gaussian { sigma, repetitions } => {
                repetitions as f64 * alpha / (2.0 * sigma * sigma)
            }
            MechanismCurve::PureDp { eps } => pure_dp_entry(eps, alpha),
        }
    }

    pub fn on_grid(&self, grid: &AlphaGrid) -> RdpVector {
        RdpVector::from_fn(grid, |a| self.eval(a))
    }

    /// Pure-DP bound of the mechanism, `None` when unbounded.
    pub fn eps_inf(&self) -> Option<f64> {
        match *self {
            MechanismCurve::Gaussian { .. } => None,
            MechanismCurve::PureDp { eps } => Some(eps),
        }
    }
}

fn pure_dp_entry(eps: f64, alpha: f64) -> f64 {
    eps.min(alpha * eps * eps / 2.0)
}

/// `alpha * sensitivity^2 / (2 sigma^2)` at every order.
pub fn gaussian_rdp(sigma: f64, sensitivity: f64, grid: &AlphaGrid) -> Result<RdpVector> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    if !(sensitivity > 0.0 && sensitivity.is_finite()) {
        return Err(Error::param(format!("sensitivity must be > 0, got {sensitivity}")));
    }
    let scale = sensitivity * sensitivity / (2.0 * sigma * sigma);
    Ok(RdpVector::from_fn(grid, |a| a * scale))
}

/// `min(eps, alpha * eps^2 / 2)`: the pure-DP cap combined with the zCDP route.
pub fn pure_dp_to_rdp(eps: f64, grid: &AlphaGrid) -> Result<RdpVector> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param(format!("epsilon must be > 0, got {eps}")));
    }
    Ok(RdpVector::from_fn(grid, |a| pure_dp_entry(eps, a)))
}

/// `rho * alpha` at every order.
pub fn zcdp_to_rdp(rho: f64, grid: &AlphaGrid) -> Result<RdpVector> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param(format!("rho must be > 0, got {rho}")));
    }
    Ok(RdpVector::from_fn(grid, |a| rho * a))
}

/// Smallest Gaussian noise (sensitivity 1) whose `repetitions`-fold curve
/// converts back to at most `epsilon` at `delta` on this grid. The bisection
/// stops at a relative width of 1e-10 and always returns the conservative end.
pub fn calibrate_gaussian_sigma(
    epsilon: f64,
    delta: f64,
    repetitions: u32,
    grid: &AlphaGrid,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!(
            "gaussian calibration needs delta in (0, 1), got {delta}"
        )));
    }
    if !(epsilon > 0.0) || repetitions == 0 {
        return Err(Error::param("gaussian calibration needs epsilon > 0 and repetitions >= 1"));
    }
    let adp = |sigma: f64| -> f64 {
        let per_order = repetitions as f64 / (2.0 * sigma * sigma);
        let v = RdpVector::from_fn(grid, |a| a * per_order);
        rdp_to_adp(&v, delta).expect("delta checked above")
    };
    let mut lo = 1e-3;
    let mut hi = 1.0;
    while adp(hi) > epsilon {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::param(format!(
                "cannot reach epsilon {epsilon} at delta {delta} on this grid"
            )));
        }
    }
    while adp(lo) <= epsilon && lo > 1e-12 {
        hi = lo;
        lo /= 2.0;
    }
    while (hi - lo) / hi > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if adp(mid) > epsilon {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Calibrated closed-form curve for a mechanism spec.
pub fn mechanism_curve(spec: &MechanismSpec, grid: &AlphaGrid) -> Result<MechanismCurve> {
    spec.validate()?;
    if spec.kind.is_gaussian() {
        let sigma = calibrate_gaussian_sigma(
            spec.target_epsilon,
            spec.target_delta,
            spec.repetitions,
            grid,
        )?;
        Ok(MechanismCurve::Gaussian {
            sigma,
            repetitions: spec.repetitions,
        })
    } else {
        Ok(MechanismCurve::PureDp {
            eps: spec.target_epsilon,
        })
    }
}

/// RDP vector for a mechanism spec on the grid.
pub fn mechanism_rdp(spec: &MechanismSpec, grid: &AlphaGrid) -> Result<RdpVector> {
    Ok(mechanism_curve(spec, grid)?.on_grid(grid))
}
