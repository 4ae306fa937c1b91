//! Stationary statistics of `β = y² + z²` under secular Y-homodyne detection.
//!
//! `β` obeys the autonomous SDE `dβ = γA dt + √(γB) dW` with
//! `A = −3β/2 + η(1 + β²/2)` and `B = 2ηβ(1−β)²`. Its stationary density on
//! `[0, 1)` is `p ∝ (1−β)^{−5/2} exp[−(3/2)β(1−η)/((1−β)η)]`.
//! With `u = β/(1−β)`, `p(β)dβ ∝ (1+u)^{1/2} e^{−cu} du`, `c = (3/2)(1−η)/η`.

use serde::{Deserialize, Serialize};

use crate::quadrature::{integrate, integrate_semi_infinite};
use crate::OracleError;

fn check_unit(name: &'static str, v: f64) -> Result<(), OracleError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(OracleError::Domain { name, value: v, domain: "[0, 1]" });
    }
    Ok(())
}

/// Drift `A(β)` and diffusion `B(β)` of the β-SDE, in units of `γ`.
pub fn beta_drift_diffusion(beta: f64, eta: f64) -> Result<(f64, f64), OracleError> {
    check_unit("beta", beta)?;
    check_unit("eta", eta)?;
    let a = -1.5 * beta + eta * (1.0 + 0.5 * beta * beta);
    let b = 2.0 * eta * beta * (1.0 - beta) * (1.0 - beta);
    Ok((a, b))
}

/// Normalized stationary density for `0 < η < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaDensity {
    pub eta: f64,
    /// `c = (3/2)(1−η)/η`.
    pub c: f64,
    /// `N′ = ∫₀^∞ (1+u)^{1/2} e^{−cu} du`.
    pub normalization: f64,
    tol: f64,
}

impl BetaDensity {
    pub fn new(eta: f64, tol: f64) -> Result<Self, OracleError> {
        check_unit("eta", eta)?;
        if eta >= 1.0 {
            return Err(OracleError::NonNormalizable { eta });
        }
        if eta <= 0.0 {
            return Err(OracleError::DegenerateDensity { eta });
        }
        let c = 1.5 * (1.0 - eta) / eta;
        // integrate in v = cu so the decay scale is O(1) for every η
        let r = integrate_semi_infinite(|v| (1.0 + v / c).sqrt() * (-v).exp(), 0.0, tol * c * 1e-2)?;
        Ok(BetaDensity { eta, c, normalization: r.value / c, tol })
    }

    pub fn pdf(&self, beta: f64) -> f64 {
        if !(0.0..1.0).contains(&beta) {
            return 0.0;
        }
        let r = 1.0 - beta;
        let e = (-self.c * beta / r).exp();
        if e == 0.0 {
            return 0.0;
        }
        e / (r * r * r.sqrt()) / self.normalization
    }

    pub fn cdf(&self, beta: f64) -> f64 {
        if beta <= 0.0 {
            return 0.0;
        }
        if beta >= 1.0 {
            return 1.0;
        }
        let c = self.c;
        let v0 = c * beta / (1.0 - beta);
        let tail = integrate_semi_infinite(|v| (1.0 + v / c).sqrt() * (-v).exp(), v0, self.tol * c * 1e-2)
            .map(|r| r.value / c)
            .unwrap_or(f64::NAN);
        (1.0 - tail / self.normalization).clamp(0.0, 1.0)
    }

    /// `E[β]` through the `u` substitution.
    pub fn mean(&self, tol: f64) -> Result<f64, OracleError> {
        let c = self.c;
        let r = integrate_semi_infinite(
            |v| {
                let u = v / c;
                u / (1.0 + u).sqrt() * (-v).exp()
            },
            0.0,
            0.5 * tol * c * self.normalization,
        )?;
        Ok((r.value / c / self.normalization).clamp(0.0, 1.0))
    }
}

/// Oracle result that may come from a limiting convention instead of quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub value: f64,
    /// `true` at η = 0 or η = 1, where the density degenerates to a point mass.
    pub by_convention: bool,
}

/// Stationary `E[β]`.
pub fn expected_beta(eta: f64, tol: f64) -> Result<OracleValue, OracleError> {
    check_unit("eta", eta)?;
    if eta <= 0.0 || eta >= 1.0 {
        return Ok(OracleValue { value: eta.round(), by_convention: true });
    }
    let d = BetaDensity::new(eta, tol)?;
    Ok(OracleValue { value: d.mean(tol)?, by_convention: false })
}

/// `E[β]` by quadrature directly in `β` on `[0, 1)`, with `β = 1 − (1−t)³` to
/// flatten the approach to the endpoint. Slower and less robust near η = 1;
/// kept as an independent cross-check.
pub fn expected_beta_direct(eta: f64, tol: f64) -> Result<f64, OracleError> {
    check_unit("eta", eta)?;
    if eta <= 0.0 || eta >= 1.0 {
        return Err(OracleError::Domain { name: "eta", value: eta, domain: "(0, 1)" });
    }
    let c = 1.5 * (1.0 - eta) / eta;
    let unnorm = |beta: f64| {
        let r = 1.0 - beta;
        if r <= 0.0 {
            return 0.0;
        }
        let e = (-c * beta / r).exp();
        if e == 0.0 {
            0.0
        } else {
            e / (r * r * r.sqrt())
        }
    };
    let jac = |t: f64| 3.0 * (1.0 - t) * (1.0 - t);
    let map = |t: f64| 1.0 - (1.0 - t).powi(3);
    let z = integrate(|t| unnorm(map(t)) * jac(t), 0.0, 1.0, tol * 1e-2)?.value;
    let m = integrate(|t| map(t) * unnorm(map(t)) * jac(t), 0.0, 1.0, tol * 1e-2)?.value;
    Ok(m / z)
}
