//! Diffusive unravellings.
//!
//! Lab frame: `dρ = ℒρ dt + √γ H[dZ* σ−]ρ` with `⟨|dZ|²⟩ = η dt`, `⟨dZ²⟩ = υ dt`.
//! Writing `e^{−iφ} dZ = a dW₁ + i b dW₂` splits the measurement into two real
//! channels `L₁ = √γ e^{−iφ}σ−` and `L₂ = −i√γ e^{−iφ}σ−` monitored with
//! efficiencies `a²` and `b²`.
//!
//! Secular frame, Y quadrature: `dρ = L̄ρ dt + √(ηγ/4) H[i dV σ−+ + i dW_x σx − i dV* σ+−]ρ`.
//! With `dV = (dV₁ + i dV₂)/√2` the measured operators are `−σy/√2`, `−σz/√2`
//! (Hermitian, informative) and `iσx` (anti-Hermitian, a random rotation).
//!
//! The default steppers use the Kraus form of the Euler step,
//! `ρ' ∝ MρM† + Σ(1−ηⱼ)ℓⱼρℓⱼ† dt` with `M = 1 − K dt + Σ √ηⱼ ℓⱼ dYⱼ`, which
//! agrees with Euler–Maruyama to first order and is positive by construction.
//! Plain Euler–Maruyama steppers are kept for reference.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::lindblad::{exact_liouvillian, secular_liouvillian};
use crate::operator::PauliOp;
use crate::state::BlochState;
use crate::trajectory::{Sample, TrajectoryRecord};
use crate::{NoiseError, SimError};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusiveFrame {
    Lab,
    SecularY,
}

/// Member of the diffusive family, `0 ≤ |υ| ≤ η ≤ 1`, `υ = e^{2iφ}|υ|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusiveSpec {
    pub eta: f64,
    pub upsilon: Complex64,
    pub frame: DiffusiveFrame,
}

impl DiffusiveSpec {
    pub fn general(eta: f64, upsilon: Complex64) -> Result<Self, NoiseError> {
        let s = DiffusiveSpec { eta, upsilon, frame: DiffusiveFrame::Lab };
        s.validate()?;
        Ok(s)
    }

    /// X homodyne, `υ = η`, `φ = 0`.
    pub fn x_homodyne(eta: f64) -> Self {
        DiffusiveSpec { eta, upsilon: Complex64::new(eta, 0.0), frame: DiffusiveFrame::Lab }
    }

    /// Y homodyne in the lab frame, `υ = −η`, `φ = π/2`.
    pub fn y_homodyne(eta: f64) -> Self {
        DiffusiveSpec { eta, upsilon: Complex64::new(-eta, 0.0), frame: DiffusiveFrame::Lab }
    }

    /// Quantum state diffusion, `(η, υ) = (1, 0)`.
    pub fn qsd() -> Self {
        DiffusiveSpec { eta: 1.0, upsilon: Complex64::new(0.0, 0.0), frame: DiffusiveFrame::Lab }
    }

    /// Y homodyne in the secular rotating frame.
    pub fn secular_y(eta: f64) -> Self {
        DiffusiveSpec { eta, upsilon: Complex64::new(-eta, 0.0), frame: DiffusiveFrame::SecularY }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(NoiseError::EtaOutOfRange { eta: self.eta });
        }
        let u = self.upsilon.norm();
        if u > self.eta * (1.0 + 1e-12) {
            return Err(NoiseError::UpsilonTooLarge { eta: self.eta, abs_upsilon: u });
        }
        Ok(())
    }

    /// Local-oscillator phase, `arg(υ)/2` (0 when `υ = 0`).
    pub fn phi(&self) -> f64 {
        if self.upsilon.norm() > 0.0 {
            0.5 * self.upsilon.arg()
        } else {
            0.0
        }
    }

    /// `(a, b) = (√((η+|υ|)/2), √((η−|υ|)/2))`.
    pub fn amplitudes(&self) -> (f64, f64) {
        let u = self.upsilon.norm().min(self.eta);
        (((self.eta + u) / 2.0).sqrt(), ((self.eta - u) / 2.0).max(0.0).sqrt())
    }
}

/// Noise for one step. Lab-frame specs fill `dz`; secular specs fill `dv` and
/// `dw_x`. Unused fields are zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseIncrement {
    pub dz: Complex64,
    pub dv: Complex64,
    pub dw_x: f64,
}

impl NoiseIncrement {
    pub const ZERO: NoiseIncrement =
        NoiseIncrement { dz: Complex64::new(0.0, 0.0), dv: Complex64::new(0.0, 0.0), dw_x: 0.0 };
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn sample_noise<R: Rng + ?Sized>(spec: &DiffusiveSpec, dt: f64, rng: &mut R) -> Result<NoiseIncrement, NoiseError> {
    spec.validate()?;
    if !(dt > 0.0) {
        return Err(NoiseError::NonPositiveDt { dt });
    }
    Ok(draw_noise(spec.frame, spec.amplitudes(), spec.phi(), dt.sqrt(), rng))
}

#[inline]
fn draw_noise<R: Rng + ?Sized>(frame: DiffusiveFrame, (a, b): (f64, f64), phi: f64, sdt: f64, rng: &mut R) -> NoiseIncrement {
    match frame {
        DiffusiveFrame::Lab => {
            let w1 = normal(rng) * sdt;
            let w2 = if b > 0.0 { normal(rng) * sdt } else { 0.0 };
            let dz = Complex64::from_polar(1.0, phi) * Complex64::new(a * w1, b * w2);
            NoiseIncrement { dz, ..NoiseIncrement::ZERO }
        }
        DiffusiveFrame::SecularY => {
            let h = sdt / SQRT2;
            let dv = Complex64::new(normal(rng) * h, normal(rng) * h);
            NoiseIncrement { dv, dw_x: normal(rng) * sdt, ..NoiseIncrement::ZERO }
        }
    }
}

/// `dZ_(η,υ) + dZ_(1−η,−υ)` from independent draws, which has QSD statistics
/// whenever both members are valid.
pub fn decomposed_qsd_noise<R: Rng + ?Sized>(
    part: &DiffusiveSpec,
    dt: f64,
    rng: &mut R,
) -> Result<Complex64, NoiseError> {
    let complement = DiffusiveSpec::general(1.0 - part.eta, -part.upsilon)?;
    Ok(sample_noise(part, dt, rng)?.dz + sample_noise(&complement, dt, rng)?.dz)
}

/// Noise driving `β` in the secular Y SME, `dW_β = −√2 Re[dV e^{−iθ}]` with
/// `θ = atan2(z, y)`.
pub fn beta_noise(dv: Complex64, theta: f64) -> f64 {
    -SQRT2 * (dv * Complex64::from_polar(1.0, -theta)).re
}

/// Measurement record increment `dY = dW + √η ⟨ℓ + ℓ†⟩ dt` for a normalized state.
#[inline]
pub fn record_increment(op: &PauliOp, weight: f64, rho: &BlochState, dw: f64, dt: f64) -> f64 {
    dw + weight * op.anticomm_sum(rho).w * dt
}

/// Unnormalized Kraus update `MρM† + Σ fₖ ℓₖρℓₖ† dt` with
/// `M = 1 − K dt + Σ weightⱼ dYⱼ ℓⱼ`.
pub fn kraus_update(
    rho: &BlochState,
    k_eff: &PauliOp,
    monitored: &[(PauliOp, f64, f64)],
    unmonitored: &[(PauliOp, f64)],
    dt: f64,
) -> BlochState {
    let mut m = PauliOp::identity() - k_eff.scaled(dt);
    for (op, weight, dy) in monitored {
        m = m + op.scaled(weight * dy);
    }
    let mut out = m.sandwich(rho);
    for (op, frac) in unmonitored {
        if *frac > 0.0 {
            out = out + op.sandwich(rho) * (frac * dt);
        }
    }
    out
}

fn finish(raw: BlochState, step: u64, t: f64) -> Result<BlochState, SimError> {
    let (s, _) = raw.normalize().map_err(|source| SimError::Step { step, t, source })?;
    s.enforce_positivity().map_err(|source| SimError::Step { step, t, source })
}

/// Precomputed lab-frame stepper.
#[derive(Clone, Debug)]
pub struct LabStepper {
    spec: DiffusiveSpec,
    a: f64,
    b: f64,
    rot: Complex64,
    k_eff: PauliOp,
    l1: PauliOp,
    l2: PauliOp,
    jump: PauliOp,
}

impl LabStepper {
    pub fn new(spec: &DiffusiveSpec, omega: f64, gamma: f64) -> Result<Self, NoiseError> {
        spec.validate()?;
        let (a, b) = spec.amplitudes();
        let phi = spec.phi();
        let sm = PauliOp::sigma_minus().scaled(gamma.sqrt());
        let l1 = sm.scaled_c(Complex64::from_polar(1.0, -phi));
        let l2 = l1.scaled_c(Complex64::new(0.0, -1.0));
        // K = iH + ½γσ+σ−, H = (Ω/2)σx
        let k_eff = PauliOp::sigma_x().scaled_c(Complex64::new(0.0, 0.5 * omega)) + sm.adjoint().product(&sm).scaled(0.5);
        Ok(LabStepper {
            spec: *spec,
            a,
            b,
            rot: Complex64::from_polar(1.0, -phi),
            k_eff,
            l1,
            l2,
            jump: sm,
        })
    }

    /// Unnormalized Kraus update and the two record increments.
    pub fn update(&self, rho: &BlochState, noise: &NoiseIncrement, dt: f64) -> (BlochState, [f64; 2]) {
        let zeta = self.rot * noise.dz;
        let y1 = zeta.re + self.a * self.a * self.l1.anticomm_sum(rho).w * dt;
        let y2 = zeta.im + self.b * self.b * self.l2.anticomm_sum(rho).w * dt;
        let raw = kraus_update(
            rho,
            &self.k_eff,
            &[(self.l1, 1.0, y1), (self.l2, 1.0, y2)],
            &[(self.jump, 1.0 - self.spec.eta)],
            dt,
        );
        (raw, [y1, y2])
    }

    pub fn step(&self, rho: &BlochState, noise: &NoiseIncrement, dt: f64) -> Result<BlochState, SimError> {
        finish(self.update(rho, noise, dt).0, 0, 0.0)
    }
}

/// One lab-frame step from a normalized state.
pub fn diffusive_step(
    state: &BlochState,
    spec: &DiffusiveSpec,
    omega: f64,
    gamma: f64,
    dt: f64,
    noise: &NoiseIncrement,
) -> Result<BlochState, SimError> {
    LabStepper::new(spec, omega, gamma)?.step(state, noise, dt)
}

/// Plain Euler–Maruyama step of the normalized SME,
/// `ρ + ℒρ dt + √γ H[dZ* σ−]ρ`, renormalized and clamped.
pub fn diffusive_step_em(
    state: &BlochState,
    spec: &DiffusiveSpec,
    omega: f64,
    gamma: f64,
    dt: f64,
    noise: &NoiseIncrement,
) -> Result<BlochState, SimError> {
    spec.validate()?;
    let c = PauliOp::sigma_minus().scaled_c(noise.dz.conj() * gamma.sqrt());
    let raw = *state + exact_liouvillian(state, omega, gamma) * dt + c.innovation(state);
    finish(raw, 0, 0.0)
}

/// Secular Y-homodyne stepper.
///
/// The Kraus operator lives in the real algebra spanned by `{1, σy, σz, iσx}`,
/// which never couples `x` to `(w, y, z)`, so the update is written out in
/// components.
#[derive(Clone, Copy, Debug)]
pub struct SecularYStepper {
    pub eta: f64,
    pub gamma: f64,
}

impl SecularYStepper {
    pub fn new(eta: f64, gamma: f64) -> Self {
        SecularYStepper { eta, gamma }
    }

    /// Record increments `(dY₁, dY₂)` of the two informative channels.
    pub fn records(&self, rho: &BlochState, noise: &NoiseIncrement, dt: f64) -> [f64; 2] {
        let k = (0.25 * self.gamma).sqrt();
        let s = self.eta.sqrt();
        let (dv1, dv2) = (SQRT2 * noise.dv.re, SQRT2 * noise.dv.im);
        // ⟨ℓ + ℓ†⟩ for ℓ = −kσy/√2 and −kσz/√2
        let e1 = -SQRT2 * k * rho.y / rho.w;
        let e2 = -SQRT2 * k * rho.z / rho.w;
        [dv1 + s * e1 * dt, dv2 + s * e2 * dt]
    }

    /// Unnormalized update driven by given record increments.
    pub fn update_with_records(&self, rho: &BlochState, dy: [f64; 2], dw_x: f64, dt: f64) -> BlochState {
        let k = (0.25 * self.gamma).sqrt();
        let s = self.eta.sqrt();
        let k2 = k * k;
        let alpha = 1.0 - k2 * dt;
        let by = -s * k * dy[0] / SQRT2;
        let bz = -s * k * dy[1] / SQRT2;
        let de = s * k * dw_x;
        let (w, x, y, z) = (rho.w, rho.x, rho.y, rho.z);
        let (a2, by2, bz2, de2) = (alpha * alpha, by * by, bz * bz, de * de);
        let lost = (1.0 - self.eta) * k2 * dt;
        BlochState {
            w: w * (a2 + by2 + bz2 + de2)
                + y * 2.0 * (alpha * by - bz * de)
                + z * 2.0 * (alpha * bz + by * de)
                + 2.0 * lost * w,
            x: x * (a2 - by2 - bz2 + de2),
            y: w * 2.0 * (alpha * by + bz * de) + y * (a2 + by2 - bz2 - de2) + z * 2.0 * (alpha * de + by * bz)
                - lost * y,
            z: w * 2.0 * (alpha * bz - by * de) + y * 2.0 * (by * bz - alpha * de) + z * (a2 - by2 + bz2 - de2)
                - lost * z,
        }
    }

    pub fn update(&self, rho: &BlochState, noise: &NoiseIncrement, dt: f64) -> BlochState {
        self.update_with_records(rho, self.records(rho, noise, dt), noise.dw_x, dt)
    }

    pub fn step(&self, rho: &BlochState, noise: &NoiseIncrement, dt: f64) -> Result<BlochState, SimError> {
        finish(self.update(rho, noise, dt), 0, 0.0)
    }
}

/// One secular Y-homodyne step from a normalized state.
pub fn secular_y_step(
    state: &BlochState,
    eta: f64,
    gamma: f64,
    dt: f64,
    noise: &NoiseIncrement,
) -> Result<BlochState, SimError> {
    SecularYStepper::new(eta, gamma).step(state, noise, dt)
}

/// Channel operators of the secular Y unravelling with the sign of the
/// `σ+−` noise term set to `sideband_sign` (`+1` is the physical choice).
/// Returned as `(ℓ₁, ℓ₂, ℓ₃)` multiplying `(dV₁, dV₂, dW_x)`.
pub fn secular_y_channels(gamma: f64, sideband_sign: f64) -> [PauliOp; 3] {
    let k = (0.25 * gamma).sqrt();
    let mp = PauliOp::sigma_minus_plus();
    let pm = PauliOp::sigma_plus_minus();
    let i = Complex64::new(0.0, 1.0);
    let l1 = (mp - pm.scaled(sideband_sign)).scaled_c(i * (k / SQRT2));
    let l2 = (mp + pm.scaled(sideband_sign)).scaled(-k / SQRT2);
    let l3 = PauliOp::sigma_x().scaled_c(i * k);
    [l1, l2, l3]
}

/// Secular Y step through the generic operator path, with a selectable sign
/// for the `σ+−` noise term.
pub fn secular_y_step_signed(
    state: &BlochState,
    eta: f64,
    gamma: f64,
    dt: f64,
    noise: &NoiseIncrement,
    sideband_sign: f64,
) -> Result<BlochState, SimError> {
    let ls = secular_y_channels(gamma, sideband_sign);
    let k_eff = ls.iter().fold(PauliOp::zero(), |acc, l| acc + l.adjoint().product(l).scaled(0.5));
    let s = eta.sqrt();
    let dw = [SQRT2 * noise.dv.re, SQRT2 * noise.dv.im, noise.dw_x];
    let monitored: Vec<(PauliOp, f64, f64)> =
        ls.iter().zip(dw).map(|(l, w)| (*l, s, record_increment(l, s, state, w, dt))).collect();
    let unmonitored: Vec<(PauliOp, f64)> = ls.iter().map(|l| (*l, 1.0 - eta)).collect();
    finish(kraus_update(state, &k_eff, &monitored, &unmonitored, dt), 0, 0.0)
}

/// Plain Euler–Maruyama secular Y step.
pub fn secular_y_step_em(
    state: &BlochState,
    eta: f64,
    gamma: f64,
    dt: f64,
    noise: &NoiseIncrement,
) -> Result<BlochState, SimError> {
    let i = Complex64::new(0.0, 1.0);
    let c = PauliOp::sigma_minus_plus().scaled_c(i * noise.dv)
        + PauliOp::sigma_x().scaled_c(i * noise.dw_x)
        - PauliOp::sigma_plus_minus().scaled_c(i * noise.dv.conj());
    let raw = *state + secular_liouvillian(state, gamma) * dt + c.scaled((eta * gamma / 4.0).sqrt()).innovation(state);
    finish(raw, 0, 0.0)
}

/// Either stepper behind one interface.
#[derive(Clone, Debug)]
pub enum DiffusiveStepper {
    Lab(LabStepper),
    SecularY(SecularYStepper),
}

impl DiffusiveStepper {
    pub fn new(spec: &DiffusiveSpec, omega: f64, gamma: f64) -> Result<Self, NoiseError> {
        spec.validate()?;
        Ok(match spec.frame {
            DiffusiveFrame::Lab => DiffusiveStepper::Lab(LabStepper::new(spec, omega, gamma)?),
            DiffusiveFrame::SecularY => DiffusiveStepper::SecularY(SecularYStepper::new(spec.eta, gamma)),
        })
    }

    #[inline]
    pub fn update(&self, rho: &BlochState, noise: &NoiseIncrement, dt: f64) -> BlochState {
        match self {
            DiffusiveStepper::Lab(s) => s.update(rho, noise, dt).0,
            DiffusiveStepper::SecularY(s) => s.update(rho, noise, dt),
        }
    }
}

/// Integrate one diffusive trajectory and report the state at `times`
/// (ascending, rounded to the step grid).
#[allow(clippy::too_many_arguments)]
pub fn run_homodyne_trajectory<R: Rng + ?Sized>(
    spec: &DiffusiveSpec,
    omega: f64,
    gamma: f64,
    dt: f64,
    initial: BlochState,
    times: &[f64],
    stream: u64,
    rng: &mut R,
) -> Result<TrajectoryRecord, SimError> {
    if !(dt > 0.0) {
        return Err(NoiseError::NonPositiveDt { dt }.into());
    }
    let stepper = DiffusiveStepper::new(spec, omega, gamma)?;
    let (amp, phi, sdt) = (spec.amplitudes(), spec.phi(), dt.sqrt());
    let (mut rho, _) = initial.normalize()?;
    let mut step: u64 = 0;
    let mut samples = Vec::with_capacity(times.len());
    for &t in times {
        let target = (t / dt).round().max(0.0) as u64;
        while step < target {
            let noise = draw_noise(spec.frame, amp, phi, sdt, rng);
            let raw = stepper.update(&rho, &noise, dt);
            step += 1;
            rho = finish(raw, step, step as f64 * dt)?;
        }
        samples.push(Sample { t: step as f64 * dt, state: rho });
    }
    Ok(TrajectoryRecord { stream, samples, events: step })
}
