//! Poisson-subsampling amplification bounds.
//!
//! Both closed forms are defined at integer orders only. A fractional order is
//! evaluated at its ceiling (Rényi divergence is nondecreasing in the order)
//! and every result is capped by the unamplified curve, which is itself a
//! valid bound. Orders above [`MAX_EXPANSION_ORDER`] skip the binomial
//! expansion and keep the cap.

use serde::{Deserialize, Serialize};

use super::{AlphaGrid, MechanismCurve, RdpVector};
use crate::error::{Error, Result};

/// Largest integer order for which the binomial expansion is evaluated.
pub const MAX_EXPANSION_ORDER: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseKind {
    Gaussian,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationParams {
    pub gamma: f64,
    pub base_kind: BaseKind,
    /// Pure-DP bound of the base mechanism; `None` means unbounded.
    pub eps_inf: Option<f64>,
}

impl AmplificationParams {
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if let Some(e) = self.eps_inf {
            if !(e >= 0.0) {
                return Err(Error::param(format!("eps_inf must be >= 0, got {e}")));
            }
        }
        Ok(())
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=1.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::param(format!("sampling probability must be in [0, 1], got {gamma}")))
    }
}

fn expansion_order(alpha: f64) -> Option<u64> {
    let n = alpha.ceil().max(2.0);
    (n <= MAX_EXPANSION_ORDER as f64).then_some(n as u64)
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// `ln(1 + e^x)` without overflow or loss of precision for small `x`.
fn ln_one_plus_exp(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x < 0.0 {
        x.exp().ln_1p()
    } else {
        x + (-x).exp().ln_1p()
    }
}

/// Sampled-Gaussian moment at integer order `n` (sensitivity 1), in RDP units.
fn sampled_gaussian_at(sigma: f64, gamma: f64, n: u64) -> f64 {
    let ln_g = gamma.ln();
    let ln_1mg = (-gamma).ln_1p();
    let inv_two_var = 1.0 / (2.0 * sigma * sigma);
    let mut ln_binom = 0.0;
    let mut terms = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        if k > 0 {
            ln_binom += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let kf = k as f64;
        let mut t = ln_binom + kf * kf * inv_two_var - kf * inv_two_var;
        if k > 0 {
            t += kf * ln_g;
        }
        if k < n {
            t += (n - k) as f64 * ln_1mg;
        }
        terms.push(t);
    }
    log_sum_exp(terms.into_iter()) / (n - 1) as f64
}

/// Amplified RDP curve of a sensitivity-1 Gaussian with noise `sigma` under
/// Poisson subsampling with inclusion probability `gamma`.
pub fn amplify_poisson_gaussian(sigma: f64, gamma: f64, grid: &AlphaGrid) -> Result<RdpVector> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
    }
    check_gamma(gamma)?;
    let base = |a: f64| a / (2.0 * sigma * sigma);
    Ok(RdpVector::from_fn(grid, |alpha| {
        if gamma == 0.0 {
            return 0.0;
        }
        if gamma == 1.0 {
            return base(alpha);
        }
        match expansion_order(alpha) {
            Some(n) => sampled_gaussian_at(sigma, gamma, n).min(base(alpha)),
            None => base(alpha),
        }
    }))
}

/// Generic integer-order upper bound for an arbitrary base curve.
fn generic_at(base: &dyn Fn(u64) -> f64, eps_inf: Option<f64>, gamma: f64, n: u64) -> f64 {
    let ln_g = gamma.ln();
    // ln min(2, (e^{eps_inf} - 1)^j)
    let ln_inf_factor = |j: u64| -> f64 {
        match eps_inf {
            None => std::f64::consts::LN_2,
            Some(e) => (j as f64 * e.exp_m1().ln()).min(std::f64::consts::LN_2),
        }
    };
    let e2 = base(2);
    let ln_binom2 = ((n * (n - 1)) as f64 / 2.0).ln();
    let second = (4.0 * e2.exp_m1()).ln().min(e2 + ln_inf_factor(2));
    let mut terms = vec![2.0 * ln_g + ln_binom2 + second];
    let mut ln_binom = ln_binom2;
    for j in 3..=n {
        ln_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
        terms.push(j as f64 * ln_g + ln_binom + (j - 1) as f64 * base(j) + ln_inf_factor(j));
    }
    ln_one_plus_exp(log_sum_exp(terms.into_iter())) / (n - 1) as f64
}

/// Pure-DP amplification: the subsampled mechanism is `e' = ln(1 + gamma
/// (e^eps - 1))`-DP, hence `min(e', alpha e'^2 / 2)`-RDP at every order.
fn pure_amplified(eps_inf: Option<f64>, gamma: f64, alpha: f64) -> f64 {
    eps_inf.map_or(f64::INFINITY, |e| {
        let amplified = (gamma * e.exp_m1()).ln_1p();
        amplified.min(alpha * amplified * amplified / 2.0)
    })
}

/// Generic Poisson-subsampling bound for a base curve given as a function of
/// the order. `base` must be defined at every integer order up to the largest
/// expanded order and at every grid order.
pub fn amplify_poisson_generic_with(
    base: impl Fn(f64) -> f64,
    eps_inf: Option<f64>,
    gamma: f64,
    grid: &AlphaGrid,
) -> Result<RdpVector> {
    AmplificationParams {
        gamma,
        base_kind: BaseKind::Generic,
        eps_inf,
    }
    .validate()?;
    let by_int = |j: u64| base(j as f64);
    Ok(RdpVector::from_fn(grid, |alpha| {
        if gamma == 0.0 {
            return 0.0;
        }
        let unamplified = base(alpha);
        if gamma == 1.0 {
            return unamplified;
        }
        let bound = match expansion_order(alpha) {
            Some(n) => generic_at(&by_int, eps_inf, gamma, n),
            None => f64::INFINITY,
        };
        unamplified.min(bound).min(pure_amplified(eps_inf, gamma, alpha))
    }))
}

/// Generic Poisson-subsampling bound for a base curve given as a vector. The
/// base vector's grid must contain every target order and every integer order
/// `2..=ceil(alpha)` for each expanded target order.
pub fn amplify_poisson_generic(
    base: &RdpVector,
    eps_inf: Option<f64>,
    gamma: f64,
    grid: &AlphaGrid,
) -> Result<RdpVector> {
    let lookup = |alpha: f64| base.at_order(alpha);
    for &alpha in grid.orders() {
        if lookup(alpha).is_none() {
            return Err(Error::param(format!("base curve is missing order {alpha}")));
        }
        if let Some(n) = expansion_order(alpha) {
            if let Some(j) = (2..=n).find(|j| lookup(*j as f64).is_none()) {
                return Err(Error::param(format!(
                    "base curve is missing integer order {j} needed to expand order {alpha}"
                )));
            }
        }
    }
    amplify_poisson_generic_with(|a| lookup(a).expect("checked above"), eps_inf, gamma, grid)
}

/// Amplified cost of a calibrated mechanism at sampling probability `gamma`.
pub fn amplify(curve: &MechanismCurve, gamma: f64, grid: &AlphaGrid) -> Result<RdpVector> {
    match *curve {
        MechanismCurve::Gaussian { sigma, repetitions } => {
            Ok(amplify_poisson_gaussian(sigma, gamma, grid)?.scale(repetitions as f64))
        }
        MechanismCurve::PureDp { .. } => {
            amplify_poisson_generic_with(|a| curve.eval(a), curve.eps_inf(), gamma, grid)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rdp::{gaussian_rdp, pure_dp_to_rdp};

    fn grid(orders: &[f64]) -> AlphaGrid {
        AlphaGrid::new(orders.to_vec()).unwrap()
    }

    #[test]
    fn gaussian_boundaries() {
        let g = AlphaGrid::standard();
        assert!(amplify_poisson_gaussian(1.0, 0.0, &g).unwrap().is_zero());
        let full = amplify_poisson_gaussian(1.0, 1.0, &g).unwrap();
        assert_eq!(full, gaussian_rdp(1.0, 1.0, &g).unwrap());
        assert_eq!(full.at_order(2.0), Some(1.0));
        assert!(amplify_poisson_gaussian(1.0, 1.5, &g).is_err());
        assert!(amplify_poisson_gaussian(1.0, -0.1, &g).is_err());
    }

    #[test]
    fn gaussian_quarter_sample_at_order_two() {
        let v = amplify_poisson_gaussian(1.0, 0.25, &grid(&[2.0])).unwrap();
        let expected = (0.5625 + 0.375 + 0.0625 * 1f64.exp()).ln();
        assert!((v.get(0) - expected).abs() < 1e-14);
        assert!((v.get(0) - 0.10201).abs() < 1e-5);
    }

    #[test]
    fn gaussian_integer_formula_near_one() {
        // gamma close to 1 reproduces the full-sample value at integer orders
        let v = amplify_poisson_gaussian(2.0, 1.0 - 1e-12, &grid(&[3.0, 5.0])).unwrap();
        assert!((v.get(0) - 3.0 / 8.0).abs() < 1e-9);
        assert!((v.get(1) - 5.0 / 8.0).abs() < 1e-9);
    }

    #[test]
    fn huge_orders_fall_back_to_base() {
        let g = AlphaGrid::standard();
        let v = amplify_poisson_gaussian(30.0, 0.25, &g).unwrap();
        let base = gaussian_rdp(30.0, 1.0, &g).unwrap();
        assert_eq!(v.at_order(1e10), base.at_order(1e10));
        assert!(v.at_order(64.0).unwrap() < base.at_order(64.0).unwrap());
    }

    #[test]
    fn generic_quarter_sample_unbounded_inf() {
        let g = grid(&[2.0]);
        let base = pure_dp_to_rdp(0.1, &g).unwrap();
        let v = amplify_poisson_generic(&base, None, 0.25, &g).unwrap();
        let expected = (0.0625 * 4.0 * 0.01f64.exp_m1()).ln_1p();
        assert!((v.get(0) - expected).abs() < 1e-15);
        assert!((v.get(0) - 0.002510).abs() < 1e-6);
    }

    #[test]
    fn generic_quarter_sample_with_pure_bound() {
        // with eps_inf = 0.1 the second branch e^{eps(2)} (e^{0.1}-1)^2 is smaller
        let g = grid(&[2.0]);
        let base = pure_dp_to_rdp(0.1, &g).unwrap();
        let v = amplify_poisson_generic(&base, Some(0.1), 0.25, &g).unwrap();
        let branch = 0.01f64.exp() * 0.1f64.exp_m1().powi(2);
        let expansion = (0.0625 * branch).ln_1p();
        assert!((expansion - 0.000698).abs() < 1e-6);
        // the amplified pure bound is tighter still
        let e = (0.25 * 0.1f64.exp_m1()).ln_1p();
        assert!((v.get(0) - e * e).abs() < 1e-15);
        assert!(v.get(0) < expansion);
    }

    #[test]
    fn generic_full_sample_never_exceeds_base() {
        let g = grid(&[2.0, 3.0, 4.0]);
        let base = pure_dp_to_rdp(0.1, &g).unwrap();
        let v = amplify_poisson_generic(&base, Some(0.1), 1.0, &g).unwrap();
        for i in 0..g.len() {
            assert!(v.get(i) <= base.get(i));
        }
        assert!(amplify_poisson_generic(&base, Some(0.1), 0.0, &g).unwrap().is_zero());
    }

    #[test]
    fn generic_requires_integer_orders() {
        let g = grid(&[2.0, 4.0]);
        let base = pure_dp_to_rdp(0.1, &g).unwrap();
        let err = amplify_poisson_generic(&base, None, 0.5, &g).unwrap_err();
        assert!(err.to_string().contains("integer order 3"), "{err}");
        let target = grid(&[2.0, 5.0]);
        assert!(amplify_poisson_generic(&base, None, 0.5, &target).is_err());
    }

    #[test]
    fn amplify_dispatch() {
        let g = AlphaGrid::standard();
        let gauss = MechanismCurve::Gaussian {
            sigma: 3.0,
            repetitions: 2,
        };
        let a = amplify(&gauss, 0.25, &g).unwrap();
        let b = amplify_poisson_gaussian(3.0, 0.25, &g).unwrap().scale(2.0);
        assert_eq!(a, b);
        let pure = MechanismCurve::PureDp { eps: 0.25 };
        let p = amplify(&pure, 0.25, &g).unwrap();
        for i in 0..g.len() {
            assert!(p.get(i) <= pure.eval(g.orders()[i]));
        }
    }
}
