//! Critical diagonal efficiency of a detector pair.

use qjump::steering::{critical_eta, CriticalOptions, CriticalOutcome, Evaluation};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalReport {
    pub pair: String,
    pub omega: f64,
    pub eta_critical: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub tol: f64,
    pub n_traj_used: usize,
    pub seed: u64,
    pub bracket: (f64, f64),
    pub evaluations: Vec<Evaluation>,
}

impl CriticalReport {
    pub fn inconclusive(&self) -> bool {
        self.reason.as_deref() == Some("inconclusive")
    }
}

pub fn run_critical(cfg: &RunConfig) -> Result<CriticalReport, CliError> {
    let pair = cfg.require_pair()?;
    if cfg.budget < cfg.n_traj {
        return Err(CliError::Usage(format!("budget {} is below n_traj {}", cfg.budget, cfg.n_traj)));
    }
    let opts = CriticalOptions {
        tol: cfg.tol,
        budget: cfg.budget,
        z: cfg.estimator.z,
        ensemble: cfg.ensemble(),
        steering: cfg.steering(pair),
    };
    let r = critical_eta(pair, &opts)?;
    let reason = match r.outcome {
        CriticalOutcome::Found => None,
        CriticalOutcome::NoViolation => Some("no_violation".to_string()),
        CriticalOutcome::Inconclusive => Some("inconclusive".to_string()),
    };
    Ok(CriticalReport {
        pair: pair.name().to_string(),
        omega: cfg.omega,
        eta_critical: r.eta_critical,
        reason,
        tol: cfg.tol,
        n_traj_used: r.n_traj_used,
        seed: cfg.seed,
        bracket: r.bracket,
        evaluations: r.evaluations,
    })
}
