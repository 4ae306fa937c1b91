//! Sampling plans and per-trajectory output shared by all unravellings.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::state::BlochState;

/// When a trajectory reports its conditional state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingPlan {
    /// `n` samples at `burn_in + k·stride`.
    Grid { burn_in: f64, stride: f64, n: usize },
    /// A single halt time drawn uniformly from `[t_min, t_max]`.
    RandomHalt { t_min: f64, t_max: f64 },
    /// Explicit ascending times.
    Fixed(Vec<f64>),
}

impl SamplingPlan {
    /// Default plan for stationary statistics: 20/γ burn-in, then one sample per 1/γ.
    pub fn stationary(n: usize) -> Self {
        SamplingPlan::Grid { burn_in: 20.0, stride: 1.0, n }
    }

    /// Resolve to concrete times. Draws from `rng` only for [`SamplingPlan::RandomHalt`].
    pub fn times<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            SamplingPlan::Grid { burn_in, stride, n } => (0..*n).map(|k| burn_in + k as f64 * stride).collect(),
            SamplingPlan::RandomHalt { t_min, t_max } => vec![t_min + (t_max - t_min) * rng.random::<f64>()],
            SamplingPlan::Fixed(t) => t.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    /// Normalized conditional state.
    pub state: BlochState,
}

/// Output of one simulated trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Index of the RNG substream that drove this trajectory.
    pub stream: u64,
    pub samples: Vec<Sample>,
    /// Number of detection events (jump schemes) or integration steps (diffusive schemes).
    pub events: u64,
}

impl TrajectoryRecord {
    pub fn mean_of<F: Fn(&BlochState) -> f64>(&self, f: F) -> f64 {
        if self.samples.is_empty() {
            return f64::NAN;
        }
        self.samples.iter().map(|s| f(&s.state)).sum::<f64>() / self.samples.len() as f64
    }
}
