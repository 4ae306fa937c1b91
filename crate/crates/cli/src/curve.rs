//! Purity curves: `E[x²]` or `E[y² + z²]` against efficiency.

use qjump::beta_oracle::expected_beta;
use qjump::said::said_ex2_analytic;
use qjump::steering::{build_ensemble, Scheme};
use serde::{Deserialize, Serialize};

use crate::config::{check_grid, RunConfig};
use crate::output::{fmt_sig, to_csv};
use crate::CliError;

/// Quadrature tolerance of the oracle rows.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mc,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub eta: f64,
    pub value: f64,
    /// Standard error for `mc` rows, the quadrature tolerance for `oracle` rows.
    pub mc_error: f64,
    pub method: Method,
}

pub fn oracle_value(scheme: Scheme, eta: f64) -> Result<Option<f64>, CliError> {
    Ok(match scheme {
        Scheme::Said => Some(said_ex2_analytic(eta, ORACLE_TOL)?),
        Scheme::YSecular => Some(expected_beta(eta, ORACLE_TOL)?.value),
        Scheme::XLab | Scheme::YLab => None,
    })
}

pub fn run_curve(cfg: &RunConfig) -> Result<Vec<CurveRow>, CliError> {
    let scheme = cfg.require_scheme()?;
    let grid = cfg.curve_grid();
    check_grid(&grid)?;
    let ens_cfg = cfg.ensemble();
    let mut rows = Vec::new();
    for &eta in &grid {
        let ens = build_ensemble(scheme, eta, &ens_cfg)?;
        let est = ens.purity().ok_or(qjump::SteeringError::EmptyEnsemble)?;
        rows.push(CurveRow { eta, value: est.value, mc_error: est.std_error, method: Method::Mc });
        if let Some(v) = oracle_value(scheme, eta)? {
            rows.push(CurveRow { eta, value: v, mc_error: ORACLE_TOL, method: Method::Oracle });
        }
    }
    Ok(rows)
}

pub fn curve_csv(rows: &[CurveRow]) -> Result<String, CliError> {
    to_csv(
        &["eta", "value", "mc_error", "method"],
        rows.iter().map(|r| {
            let m = match r.method {
                Method::Mc => "mc",
                Method::Oracle => "oracle",
            };
            vec![fmt_sig(r.eta), fmt_sig(r.value), fmt_sig(r.mc_error), m.to_string()]
        }),
    )
}
