//! Unconditional resonance-fluorescence master equation.
//!
//! Lab (interaction) frame: `ρ̇ = −i[(Ω/2)σx, ρ] + γ D[σ−]ρ`.
//!
//! Secular frame: in the frame rotating with the drive (phase origin `t0 = 0`),
//! dropping terms that oscillate at `Ω` and `2Ω` leaves
//! `ρ̇ = (γ/4)(D[|−⟩⟨+|] + D[σx] + D[|+⟩⟨−|])ρ`.

use serde::{Deserialize, Serialize};

use crate::state::BlochState;
use crate::{ConfigError, IntegrationError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Lab,
    Secular,
}

/// Shared simulation parameters. All times are in units of `1/γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub gamma: f64,
    /// Rabi frequency in units of `γ`.
    pub omega: f64,
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub n_traj: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { gamma: 1.0, omega: 5.0, dt: 1e-3, t_final: 50.0, seed: 0, n_traj: 1000 }
    }
}

/// Largest lab-frame step that still resolves the Rabi oscillation.
pub fn max_lab_dt(omega: f64) -> f64 {
    1e-2 / omega.abs().max(1.0)
}

/// Default step for diffusive trajectories in the given frame.
pub fn default_dt(frame: Frame, omega: f64) -> f64 {
    match frame {
        Frame::Secular => 1e-3,
        Frame::Lab => 1e-3_f64.min(max_lab_dt(omega)),
    }
}

impl SimConfig {
    pub fn validate(&self, frame: Frame) -> Result<(), ConfigError> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(ConfigError::Invalid { name: "gamma", value: self.gamma, reason: "must be positive" });
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ConfigError::Invalid { name: "dt", value: self.dt, reason: "must be positive" });
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(ConfigError::Invalid { name: "t_final", value: self.t_final, reason: "must be non-negative" });
        }
        if !self.omega.is_finite() || self.omega < 0.0 {
            return Err(ConfigError::Invalid { name: "omega", value: self.omega, reason: "must be non-negative" });
        }
        if frame == Frame::Lab && self.dt * self.gamma > max_lab_dt(self.omega / self.gamma) * (1.0 + 1e-12) {
            return Err(ConfigError::Invalid {
                name: "dt",
                value: self.dt,
                reason: "lab-frame step must satisfy dt <= 1e-2/max(1, omega)",
            });
        }
        Ok(())
    }
}

/// `dρ/dt` of the lab-frame master equation.
pub fn exact_liouvillian(s: &BlochState, omega: f64, gamma: f64) -> BlochState {
    BlochState {
        w: 0.0,
        x: -0.5 * gamma * s.x,
        y: -0.5 * gamma * s.y - omega * s.z,
        z: omega * s.y - gamma * (s.z + s.w),
    }
}

/// `dρ/dt` of the secular master equation. Transverse (y, z) components
/// relax at `3γ/4`, the σx component at `γ/2`.
pub fn secular_liouvillian(s: &BlochState, gamma: f64) -> BlochState {
    BlochState { w: 0.0, x: -0.5 * gamma * s.x, y: -0.75 * gamma * s.y, z: -0.75 * gamma * s.z }
}

pub fn liouvillian(s: &BlochState, frame: Frame, omega: f64, gamma: f64) -> BlochState {
    match frame {
        Frame::Lab => exact_liouvillian(s, omega, gamma),
        Frame::Secular => secular_liouvillian(s, gamma),
    }
}

/// Closed-form stationary state of the lab-frame equation.
pub fn lab_steady_state(omega: f64, gamma: f64) -> BlochState {
    let d = gamma * gamma + 2.0 * omega * omega;
    BlochState::normalized(0.0, 2.0 * omega * gamma / d, -gamma * gamma / d)
}

/// Map a lab-frame state at time `t` into the frame rotating with the drive.
pub fn to_rotating_frame(s: &BlochState, omega: f64, t: f64) -> BlochState {
    s.rotate_x(-omega * t)
}

pub fn from_rotating_frame(s: &BlochState, omega: f64, t: f64) -> BlochState {
    s.rotate_x(omega * t)
}

pub fn rk4_step<F: Fn(&BlochState) -> BlochState>(s: &BlochState, f: F, h: f64) -> BlochState {
    let k1 = f(s);
    let k2 = f(&(*s + k1 * (0.5 * h)));
    let k3 = f(&(*s + k2 * (0.5 * h)));
    let k4 = f(&(*s + k3 * h));
    *s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Fixed-step RK4 from `0` to `t`. The step is shrunk so that an integer
/// number of steps lands exactly on `t`.
pub fn propagate_to(
    state: &BlochState,
    frame: Frame,
    omega: f64,
    gamma: f64,
    dt: f64,
    t: f64,
) -> Result<BlochState, IntegrationError> {
    if t <= 0.0 {
        return Ok(*state);
    }
    let n = (t / dt).ceil().max(1.0) as u64;
    let h = t / n as f64;
    let mut s = *state;
    for k in 0..n {
        s = rk4_step(&s, |r| liouvillian(r, frame, omega, gamma), h);
        s = s
            .enforce_positivity()
            .map_err(|source| IntegrationError::StepTooLarge { t: (k + 1) as f64 * h, source })?;
    }
    Ok(s)
}

/// Propagate to `config.t_final`.
pub fn propagate_me(state: &BlochState, config: &SimConfig, frame: Frame) -> Result<BlochState, IntegrationError> {
    config.validate(frame)?;
    propagate_to(state, frame, config.omega, config.gamma, config.dt, config.t_final)
}

/// States at each of the (ascending) `times`.
pub fn propagate_samples(
    state: &BlochState,
    frame: Frame,
    omega: f64,
    gamma: f64,
    dt: f64,
    times: &[f64],
) -> Result<Vec<BlochState>, IntegrationError> {
    let mut out = Vec::with_capacity(times.len());
    let mut s = *state;
    let mut t = 0.0;
    for &target in times {
        s = propagate_to(&s, frame, omega, gamma, dt, target - t)?;
        t = target;
        out.push(s);
    }
    Ok(out)
}
