//! Run configuration: a JSON file plus command-line overrides.

use std::path::Path;

use qjump::steering::{BobModel, EnsembleConfig, HaltMode, Pair, Scheme, SteeringOptions};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// How records are drawn from each trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub records_per_traj: usize,
    pub halt_min: f64,
    pub halt_max: f64,
    pub stride: f64,
    pub halt: HaltMode,
    pub bob_per_axis: u32,
    pub gamma: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        let e = EnsembleConfig::default();
        Sampling {
            records_per_traj: e.records_per_traj,
            halt_min: e.halt_min,
            halt_max: e.halt_max,
            stride: e.stride,
            halt: e.halt,
            bob_per_axis: e.bob_per_axis,
            gamma: e.gamma,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Estimator {
    pub bootstrap: usize,
    pub model: BobModel,
    /// Standard errors by which `S − 1` must clear zero in the critical search.
    pub z: f64,
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator { bootstrap: 200, model: BobModel::Sampled, z: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// Trajectories per scheme for the ensemble-average checks.
    pub me_trajectories: usize,
    /// Random states for the functional and positivity fuzzing.
    pub fuzz_samples: usize,
    /// Steps for the x = 0 confinement check.
    pub confinement_steps: usize,
    /// Draws per noise specification.
    pub noise_draws: usize,
    /// Trajectories for the null-model cell.
    pub null_trajectories: usize,
    /// Flip the sign of the `σ+−` noise term in the secular Y update used by
    /// the β-drift check.
    pub inject_sideband_flip: bool,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            me_trajectories: 1000,
            fuzz_samples: 100_000,
            confinement_steps: 1_000_000,
            noise_draws: 1_000_000,
            null_trajectories: 48,
            inject_sideband_flip: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Option<Scheme>,
    pub pair: Option<Pair>,
    /// Rabi frequency in units of γ.
    pub omega: f64,
    /// Efficiencies for `curve`, and for detector A in `surface`.
    pub eta_grid: Option<Vec<f64>>,
    /// Efficiencies for detector B in `surface`; defaults to `eta_grid`.
    pub eta_b_grid: Option<Vec<f64>>,
    pub dt: Option<f64>,
    /// Last halt time of each trajectory (sets the number of records), or
    /// the last ensemble-average check time for `validate`.
    pub t_final: Option<f64>,
    pub n_traj: usize,
    pub seed: u64,
    pub tol: f64,
    /// Largest ensemble the critical search may grow to.
    pub budget: usize,
    pub workers: Option<usize>,
    pub sampling: Sampling,
    pub estimator: Estimator,
    pub validate: ValidateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scheme: None,
            pair: None,
            omega: 5.0,
            eta_grid: None,
            eta_b_grid: None,
            dt: None,
            t_final: None,
            n_traj: 128,
            seed: 0,
            tol: 0.02,
            budget: 1024,
            workers: None,
            sampling: Sampling::default(),
            estimator: Estimator::default(),
            validate: ValidateConfig::default(),
        }
    }
}

pub const DEFAULT_CURVE_GRID: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

pub fn default_surface_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

/// Flag values; `None` leaves the configuration file (or default) in place.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub scheme: Option<Scheme>,
    pub pair: Option<Pair>,
    pub omega: Option<f64>,
    pub eta: Option<f64>,
    pub eta_grid: Option<Vec<f64>>,
    pub eta_b_grid: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub n_traj: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub budget: Option<usize>,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { self.$f = v; } )* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if o.$f.is_some() { self.$f = o.$f.clone(); } )* };
        }
        set!(omega, n_traj, seed, tol, budget);
        set_opt!(scheme, pair, eta_grid, eta_b_grid, dt, t_final, workers);
        if let Some(eta) = o.eta {
            self.eta_grid = Some(vec![eta]);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return usage(format!("omega must be a non-negative number, got {}", self.omega));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return usage(format!("dt must be positive, got {dt}"));
            }
        }
        if !(self.tol >= 0.01 && self.tol < 0.5) {
            return usage(format!("tol must lie in [0.01, 0.5), got {}", self.tol));
        }
        if self.n_traj == 0 {
            return usage("n_traj must be at least 1".into());
        }
        if self.workers == Some(0) {
            return usage("workers must be at least 1".into());
        }
        for grid in [&self.eta_grid, &self.eta_b_grid].into_iter().flatten() {
            check_grid(grid)?;
        }
        self.ensemble().validate().map_err(|e| CliError::Usage(e.to_string()))
    }

    /// Fill in the grids `cmd` would otherwise default, so manifests record
    /// what actually ran.
    pub fn resolve(&mut self, cmd: crate::Command) {
        match cmd {
            crate::Command::Curve => self.eta_grid = Some(self.curve_grid()),
            crate::Command::Surface => {
                let (a, b) = self.surface_grids();
                self.eta_grid = Some(a);
                self.eta_b_grid = Some(b);
            }
            crate::Command::Critical | crate::Command::Validate => {}
        }
    }

    pub fn curve_grid(&self) -> Vec<f64> {
        self.eta_grid.clone().unwrap_or_else(|| DEFAULT_CURVE_GRID.to_vec())
    }

    pub fn surface_grids(&self) -> (Vec<f64>, Vec<f64>) {
        let a = self.eta_grid.clone().unwrap_or_else(default_surface_grid);
        let b = self.eta_b_grid.clone().unwrap_or_else(|| a.clone());
        (a, b)
    }

    pub fn records_per_traj(&self) -> usize {
        let s = &self.sampling;
        match self.t_final {
            Some(t) if s.halt == HaltMode::Strided => ((t - s.halt_max) / s.stride).floor().max(0.0) as usize + 1,
            _ => s.records_per_traj,
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        let s = &self.sampling;
        EnsembleConfig {
            n_traj: self.n_traj,
            records_per_traj: self.records_per_traj(),
            halt_min: s.halt_min,
            halt_max: s.halt_max,
            stride: s.stride,
            halt: s.halt,
            dt: self.dt,
            gamma: s.gamma,
            omega: self.omega,
            bob_per_axis: s.bob_per_axis,
            seed: self.seed,
        }
    }

    pub fn steering(&self, pair: Pair) -> SteeringOptions {
        SteeringOptions {
            model: self.estimator.model,
            bootstrap: self.estimator.bootstrap,
            ..SteeringOptions::for_pair(pair, self.seed)
        }
    }

    pub fn require_scheme(&self) -> Result<Scheme, CliError> {
        self.scheme.ok_or_else(|| CliError::Usage("--scheme is required".into()))
    }

    pub fn require_pair(&self) -> Result<Pair, CliError> {
        self.pair.ok_or_else(|| CliError::Usage("--pair is required".into()))
    }
}

fn usage<T>(msg: String) -> Result<T, CliError> {
    Err(CliError::Usage(msg))
}

/// Efficiency grids must be non-empty with every point in `(0, 1]`.
pub fn check_grid(grid: &[f64]) -> Result<(), CliError> {
    if grid.is_empty() {
        return usage("efficiency grid is empty".into());
    }
    match grid.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        Some(e) => usage(format!("efficiency {e} lies outside (0, 1]")),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_the_file() {
        let mut c: RunConfig = serde_json::from_str(r#"{"omega": 2.0, "n_traj": 16, "seed": 9}"#).unwrap();
        c.apply(&Overrides { omega: Some(10.0), eta: Some(0.7), ..Default::default() });
        assert_eq!((c.omega, c.n_traj, c.seed), (10.0, 16, 9));
        assert_eq!(c.eta_grid, Some(vec![0.7]));
    }

    #[test]
    fn unknown_keys_and_bad_grids_are_usage_errors() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"omgea": 2.0}"#).is_err());
        assert!(check_grid(&[0.5, 0.0]).is_err());
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[1.0, 0.1]).is_ok());
        let c = RunConfig { tol: 0.001, ..Default::default() };
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
    }

    #[test]
    fn t_final_sets_the_record_count() {
        let c = RunConfig { t_final: Some(100.0), ..Default::default() };
        assert_eq!(c.records_per_traj(), 61);
        assert_eq!(RunConfig::default().records_per_traj(), 200);
    }
}
