//! Qubit states in Bloch form.
//!
//! A state is stored as `(w, x, y, z)` with
//! `ρ = (w·I + x·σx + y·σy + z·σz) / 2`, so `w = Tr ρ` and the remaining
//! components are the unnormalized Bloch vector. Every superoperator used by
//! this crate closes on these four real numbers.

use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::operator::PauliOp;
use crate::StateError;

/// Overshoot of `|r| - w` (relative to `w`) accepted without any action.
pub const POSITIVITY_TOL: f64 = 1e-9;
/// Largest relative overshoot that is clamped back onto the Bloch ball.
/// Anything above this is reported as an error.
pub const CLAMP_LIMIT: f64 = 1e-6;
/// Tolerance on `w = 1` for states that must be normalized.
pub const NORM_TOL: f64 = 1e-9;

/// Possibly unnormalized qubit density operator in Bloch form.
///
/// The same type doubles as a time derivative `dρ/dt`, in which case the
/// positivity invariant does not apply.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochState {
    pub const ZERO: BlochState = BlochState { w: 0.0, x: 0.0, y: 0.0, z: 0.0 };
    pub const MAXIMALLY_MIXED: BlochState = BlochState { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        BlochState { w, x, y, z }
    }

    /// Normalized state with Bloch vector `(x, y, z)`.
    pub const fn normalized(x: f64, y: f64, z: f64) -> Self {
        BlochState { w: 1.0, x, y, z }
    }

    /// `|+⟩⟨+|`, the `+1` eigenstate of σx.
    pub const fn plus() -> Self {
        Self::normalized(1.0, 0.0, 0.0)
    }

    /// `|−⟩⟨−|`, the `−1` eigenstate of σx.
    pub const fn minus() -> Self {
        Self::normalized(-1.0, 0.0, 0.0)
    }

    pub const fn excited() -> Self {
        Self::normalized(0.0, 0.0, 1.0)
    }

    pub const fn ground() -> Self {
        Self::normalized(0.0, 0.0, -1.0)
    }

    pub fn trace(&self) -> f64 {
        self.w
    }

    pub fn bloch_norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn bloch_norm(&self) -> f64 {
        self.bloch_norm_sq().sqrt()
    }

    /// `⟨σx⟩, ⟨σy⟩, ⟨σz⟩` of the normalized state. Returns zeros for `w = 0`.
    pub fn expectations(&self) -> [f64; 3] {
        if self.w == 0.0 {
            return [0.0; 3];
        }
        [self.x / self.w, self.y / self.w, self.z / self.w]
    }

    /// `Tr ρ²` of the normalized state, i.e. `(1 + |r|²/w²)/2`.
    pub fn purity(&self) -> f64 {
        0.5 * (1.0 + self.bloch_norm_sq() / (self.w * self.w))
    }

    /// Squared Bloch length in the `x = 0` plane, `⟨σy⟩² + ⟨σz⟩²`.
    pub fn beta(&self) -> f64 {
        let [_, y, z] = self.expectations();
        y * y + z * z
    }

    /// Polar angle of `(y, z)`, measured from the `y` axis.
    pub fn theta(&self) -> f64 {
        self.z.atan2(self.y)
    }

    pub fn is_normalized(&self) -> bool {
        (self.w - 1.0).abs() <= NORM_TOL
    }

    /// Relative amount by which the Bloch vector pokes out of the ball.
    pub fn positivity_overshoot(&self) -> f64 {
        if self.w <= 0.0 {
            return if self.bloch_norm_sq() == 0.0 && self.w == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
        }
        self.bloch_norm() / self.w - 1.0
    }

    pub fn is_positive(&self) -> bool {
        self.positivity_overshoot() <= POSITIVITY_TOL
    }

    /// Apply the positivity policy: small overshoots (below [`CLAMP_LIMIT`])
    /// are pulled back onto the ball, larger ones are an error.
    pub fn enforce_positivity(self) -> Result<Self, StateError> {
        let over = self.positivity_overshoot();
        if over <= 0.0 {
            return Ok(self);
        }
        if over < CLAMP_LIMIT {
            let s = self.w / self.bloch_norm();
            return Ok(BlochState { w: self.w, x: self.x * s, y: self.y * s, z: self.z * s });
        }
        Err(StateError::PositivityViolation { overshoot: over })
    }

    /// Rescale to unit trace. Returns the normalized state and the old trace.
    pub fn normalize(&self) -> Result<(BlochState, f64), StateError> {
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(StateError::Degenerate { trace: self.w });
        }
        let inv = 1.0 / self.w;
        Ok((BlochState { w: 1.0, x: self.x * inv, y: self.y * inv, z: self.z * inv }, self.w))
    }

    /// Convex mixture `λ·a + (1−λ)·b`.
    pub fn mix(lambda: f64, a: &BlochState, b: &BlochState) -> BlochState {
        *a * lambda + *b * (1.0 - lambda)
    }

    /// Rotate the `(y, z)` components by `angle` about the x axis.
    pub fn rotate_x(&self, angle: f64) -> BlochState {
        let (s, c) = angle.sin_cos();
        BlochState { w: self.w, x: self.x, y: c * self.y - s * self.z, z: s * self.y + c * self.z }
    }

    pub fn max_abs_diff(&self, other: &BlochState) -> f64 {
        (self.w - other.w)
            .abs()
            .max((self.x - other.x).abs())
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl Add for BlochState {
    type Output = BlochState;
    fn add(self, o: BlochState) -> BlochState {
        BlochState { w: self.w + o.w, x: self.x + o.x, y: self.y + o.y, z: self.z + o.z }
    }
}

impl AddAssign for BlochState {
    fn add_assign(&mut self, o: BlochState) {
        self.w += o.w;
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}

impl Sub for BlochState {
    type Output = BlochState;
    fn sub(self, o: BlochState) -> BlochState {
        BlochState { w: self.w - o.w, x: self.x - o.x, y: self.y - o.y, z: self.z - o.z }
    }
}

impl Mul<f64> for BlochState {
    type Output = BlochState;
    fn mul(self, s: f64) -> BlochState {
        BlochState { w: self.w * s, x: self.x * s, y: self.y * s, z: self.z * s }
    }
}

/// The two terms bounded by the steering inequality `f1 + f2 ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringFunctionals {
    /// `⟨σx⟩²`
    pub f1: f64,
    /// `⟨σy⟩² + ⟨σz⟩²`
    pub f2: f64,
}

pub fn steering_functionals(state: &BlochState) -> Result<SteeringFunctionals, StateError> {
    if !state.is_normalized() {
        return Err(StateError::NotNormalized { trace: state.w });
    }
    Ok(SteeringFunctionals { f1: state.x * state.x, f2: state.y * state.y + state.z * state.z })
}

/// Jump operators of the resonance-fluorescence unravellings.
///
/// `|±⟩` are the σx eigenstates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum JumpKind {
    /// `|−⟩⟨+|`: the lower sideband, collapses onto `|−⟩`.
    LowerPlusMinus,
    /// `|+⟩⟨−|`: the upper sideband, collapses onto `|+⟩`.
    LowerMinusPlus,
    SigmaX,
    /// `σx + 1 = 2π₊`: central peak with a positive local oscillator.
    ProjectorPlus,
    /// `σx − 1 = −2π₋`: central peak with a negative local oscillator.
    ProjectorMinus,
    SigmaMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpOperator {
    pub kind: JumpKind,
    /// Amplitude prefactor, in units of √rate.
    pub scale: f64,
}

impl JumpOperator {
    pub fn new(kind: JumpKind, scale: f64) -> Self {
        JumpOperator { kind, scale }
    }

    pub fn to_pauli(&self) -> PauliOp {
        let op = match self.kind {
            JumpKind::LowerPlusMinus => PauliOp::sigma_minus_plus(),
            JumpKind::LowerMinusPlus => PauliOp::sigma_plus_minus(),
            JumpKind::SigmaX => PauliOp::sigma_x(),
            JumpKind::ProjectorPlus => PauliOp::sigma_x() + PauliOp::identity(),
            JumpKind::ProjectorMinus => PauliOp::sigma_x() - PauliOp::identity(),
            JumpKind::SigmaMinus => PauliOp::sigma_minus(),
        };
        op.scaled(self.scale)
    }
}

/// Unnormalized post-jump state `scale²·c ρ c†`. Its trace is the jump rate
/// `scale²·Tr[c†c ρ]`; a zero trace means the jump cannot happen from `state`.
pub fn apply_jump(state: &BlochState, op: &JumpOperator) -> BlochState {
    op.to_pauli().sandwich(state)
}
