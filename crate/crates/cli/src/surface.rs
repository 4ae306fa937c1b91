//! Steering sum over a grid of `(η_A, η_B)`.

use qjump::steering::{build_ensemble, steering_sum};
use serde::{Deserialize, Serialize};

use crate::config::{check_grid, RunConfig};
use crate::output::{fmt_sig, to_csv};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceCell {
    pub eta_a: f64,
    pub eta_b: f64,
    pub s: f64,
    pub mc_error: f64,
    /// `S > 1`.
    pub violation: bool,
    /// `S − 1 > 3·mc_error`.
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub pair: String,
    pub omega: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub cells: Vec<SurfaceCell>,
    pub violations: usize,
}

/// Ensembles are built once per efficiency and reused along the other axis.
pub fn run_surface(cfg: &RunConfig) -> Result<SurfaceSummary, CliError> {
    let pair = cfg.require_pair()?;
    let (grid_a, grid_b) = cfg.surface_grids();
    check_grid(&grid_a)?;
    check_grid(&grid_b)?;
    let (sa, sb) = pair.schemes();
    let ens_cfg = cfg.ensemble();
    let opts = cfg.steering(pair);
    let ens_a = grid_a.iter().map(|&e| build_ensemble(sa, e, &ens_cfg)).collect::<Result<Vec<_>, _>>()?;
    let ens_b = grid_b.iter().map(|&e| build_ensemble(sb, e, &ens_cfg)).collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::with_capacity(ens_a.len() * ens_b.len());
    for a in &ens_a {
        for b in &ens_b {
            let r = steering_sum(a, b, &opts)?;
            cells.push(SurfaceCell {
                eta_a: a.eta,
                eta_b: b.eta,
                s: r.s_value,
                mc_error: r.mc_error,
                violation: r.s_value > 1.0,
                significant: r.s_value - 1.0 > 3.0 * r.mc_error,
            });
        }
    }
    Ok(SurfaceSummary {
        pair: pair.name().to_string(),
        omega: cfg.omega,
        n_traj: cfg.n_traj,
        seed: cfg.seed,
        violations: cells.iter().filter(|c| c.violation).count(),
        cells,
    })
}

pub fn surface_csv(summary: &SurfaceSummary) -> Result<String, CliError> {
    to_csv(
        &["eta_A", "eta_B", "S", "mc_error"],
        summary.cells.iter().map(|c| vec![fmt_sig(c.eta_a), fmt_sig(c.eta_b), fmt_sig(c.s), fmt_sig(c.mc_error)]),
    )
}
