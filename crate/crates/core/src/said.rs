//! Spectral adaptive interferometric detection (SAID).
//!
//! In the secular frame the three fluorescence peaks are resolved. The two
//! sidebands are counted directly; the central peak is interfered with a weak
//! local oscillator whose sign is chosen adaptively so the central detector
//! projects onto the current `σx` eigenstate. Every detection resets the atom
//! to `|+⟩` or `|−⟩`, and between detections the state is a mixture of the
//! two, so the whole process lives on the populations `(w₊, w₋)`.
//!
//! The unnormalized no-jump state obeys
//! `ρ̇ = L̄ρ − (γη/4)(J[|−⟩⟨+|] + J[σx ± 1] + J[|+⟩⟨−|])ρ`, which in the
//! `(w_lo, w_other)` coordinates is the symmetric linear system
//! ```text
//! d/dτ (w_lo, w_other) = γ [[−1/4 − η, (1−η)/4], [(1−η)/4, −1/4]] (w_lo, w_other)
//! ```

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::quadrature::integrate_semi_infinite;
use crate::state::BlochState;
use crate::trajectory::{Sample, TrajectoryRecord};
use crate::OracleError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Detection channel, named by the spectral peak.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Lower sideband, `|−⟩⟨+|`.
    SideMinus,
    /// Central peak with the adaptive local oscillator, `σx ± 1`.
    Central,
    /// Upper sideband, `|+⟩⟨−|`.
    SidePlus,
}

impl Channel {
    /// Eigenstate the atom is left in.
    pub fn post_state(self, lo_sign: Sign) -> Sign {
        match self {
            Channel::SideMinus => Sign::Minus,
            Channel::SidePlus => Sign::Plus,
            Channel::Central => lo_sign,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: Channel,
    pub post_state: Sign,
}

/// x-diagonal conditional state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaidState {
    pub w_plus: f64,
    pub w_minus: f64,
    pub lo_sign: Sign,
    pub t_last_jump: f64,
}

impl SaidState {
    /// Pure eigenstate left by a jump at time `t`, with the feedback applied.
    pub fn after_jump(sign: Sign, t: f64) -> Self {
        let (w_plus, w_minus) = match sign {
            Sign::Plus => (1.0, 0.0),
            Sign::Minus => (0.0, 1.0),
        };
        SaidState { w_plus, w_minus, lo_sign: sign, t_last_jump: t }
    }

    pub fn trace(&self) -> f64 {
        self.w_plus + self.w_minus
    }

    /// Normalized `⟨σx⟩`.
    pub fn x(&self) -> f64 {
        (self.w_plus - self.w_minus) / self.trace()
    }

    pub fn to_bloch(&self) -> BlochState {
        BlochState::new(self.trace(), self.w_plus - self.w_minus, 0.0, 0.0)
    }

    /// `(w_lo, w_other)`.
    fn lo_coords(&self) -> [f64; 2] {
        match self.lo_sign {
            Sign::Plus => [self.w_plus, self.w_minus],
            Sign::Minus => [self.w_minus, self.w_plus],
        }
    }

    fn with_lo_coords(&self, p: [f64; 2]) -> SaidState {
        let (w_plus, w_minus) = match self.lo_sign {
            Sign::Plus => (p[0], p[1]),
            Sign::Minus => (p[1], p[0]),
        };
        SaidState { w_plus, w_minus, ..*self }
    }

    pub fn normalized(&self) -> SaidState {
        let t = self.trace();
        SaidState { w_plus: self.w_plus / t, w_minus: self.w_minus / t, ..*self }
    }
}

/// `(dw₊/dτ, dw₋/dτ)` of the unnormalized no-jump evolution.
pub fn nojump_derivative(s: &SaidState, eta: f64, gamma: f64) -> (f64, f64) {
    let [lo, other] = s.lo_coords();
    let d_lo = gamma * (0.25 * (other - lo) - eta * lo - 0.25 * eta * other);
    let d_other = gamma * (0.25 * (lo - other) - 0.25 * eta * lo);
    match s.lo_sign {
        Sign::Plus => (d_lo, d_other),
        Sign::Minus => (d_other, d_lo),
    }
}

/// Closed-form solution of the no-jump system.
///
/// With `M = [[a, c], [c, d]]`, `m = (a+d)/2`, `h = (a−d)/2` and `s = √(h² + c²)`,
/// `e^{Mτ} = e^{(m+s)τ} [ (1+e^{−2sτ})/2 · I + (1−e^{−2sτ})/(2s) · (M − m) ]`.
/// The leading exponential is kept separate so long gaps never underflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoJumpFlow {
    pub eta: f64,
    pub gamma: f64,
    a: f64,
    c: f64,
    d: f64,
    h: f64,
    s: f64,
    /// Slowest decay rate, `m + s ≤ 0`.
    lambda: f64,
}

impl NoJumpFlow {
    pub fn new(eta: f64, gamma: f64) -> Self {
        let a = -gamma * (0.25 + eta);
        let c = gamma * 0.25 * (1.0 - eta);
        let d = -gamma * 0.25;
        let m = 0.5 * (a + d);
        let h = 0.5 * (a - d);
        let s = (h * h + c * c).sqrt();
        NoJumpFlow { eta, gamma, a, c, d, h, s, lambda: (m + s).min(0.0) }
    }

    pub fn decay_rate(&self) -> f64 {
        -self.lambda
    }

    /// `e^{−λτ} · (w_lo, w_other)(τ)`.
    fn scaled(&self, p: [f64; 2], tau: f64) -> [f64; 2] {
        let e = (-2.0 * self.s * tau).exp();
        let k0 = 0.5 * (1.0 + e);
        let k1 = if self.s > 0.0 { (1.0 - e) / (2.0 * self.s) } else { tau };
        [
            k0 * p[0] + k1 * (self.h * p[0] + self.c * p[1]),
            k0 * p[1] + k1 * (self.c * p[0] - self.h * p[1]),
        ]
    }

    /// Unnormalized `(w_lo, w_other)` at `τ` after starting from `p`.
    pub fn evolve(&self, p: [f64; 2], tau: f64) -> [f64; 2] {
        let q = self.scaled(p, tau);
        let g = (self.lambda * tau).exp();
        [q[0] * g, q[1] * g]
    }

    /// Normalized `(w_lo, w_other)` at `τ`.
    pub fn evolve_normalized(&self, p: [f64; 2], tau: f64) -> [f64; 2] {
        let q = self.scaled(p, tau);
        let t = q[0] + q[1];
        [q[0] / t, q[1] / t]
    }

    /// Survival probability `S(τ) = Tr ρ̃(τ)`.
    pub fn survival(&self, p: [f64; 2], tau: f64) -> f64 {
        let q = self.evolve(p, tau);
        q[0] + q[1]
    }

    fn ln_survival(&self, p: [f64; 2], tau: f64) -> f64 {
        let q = self.scaled(p, tau);
        self.lambda * tau + (q[0] + q[1]).ln()
    }

    /// Total detection rate per unit trace, `(γη/4)(5 w_lo + w_other)/(w_lo + w_other)`.
    fn hazard(&self, q: [f64; 2]) -> f64 {
        0.25 * self.gamma * self.eta * (5.0 * q[0] + q[1]) / (q[0] + q[1])
    }

    /// Waiting-time density `p(τ) = −dS/dτ`.
    pub fn waiting_density(&self, p: [f64; 2], tau: f64) -> f64 {
        let q = self.evolve(p, tau);
        0.25 * self.gamma * self.eta * (5.0 * q[0] + q[1])
    }

    /// Channel rates `(side opposite to the LO, central, side matching the LO)`
    /// for the populations `q = (w_lo, w_other)`.
    pub fn channel_rates(&self, q: [f64; 2]) -> [f64; 3] {
        let k = self.gamma * self.eta;
        [0.25 * k * q[0], k * q[0], 0.25 * k * q[1]]
    }

    /// `∫₀^∞ S(τ) dτ = −1ᵀ M⁻¹ p`, the mean waiting time.
    pub fn survival_integral(&self, p: [f64; 2]) -> f64 {
        let det = self.a * self.d - self.c * self.c;
        -((self.d - self.c) * p[0] + (self.a - self.c) * p[1]) / det
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WaitingTime {
    Jump { tau: f64, channel: Channel },
    /// η = 0: no detector ever clicks.
    Never,
}

const WAIT_REL_TOL: f64 = 1e-12;

/// Invert `S(τ) = u` for `u ∈ (0, 1]`, using Newton steps on `ln S` inside a
/// shrinking bisection bracket.
fn invert_survival(flow: &NoJumpFlow, p: [f64; 2], u: f64) -> f64 {
    let target = u.ln();
    let g = |tau: f64| flow.ln_survival(p, tau) - target;
    if g(0.0) <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = (-target / flow.decay_rate()).max(1.0 / flow.gamma);
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut tau = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(tau);
        if v == 0.0 {
            return tau;
        }
        if v > 0.0 {
            lo = tau;
        } else {
            hi = tau;
        }
        let slope = -flow.hazard(flow.scaled(p, tau));
        let mut next = tau - v / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - tau).abs();
        tau = next;
        if step <= WAIT_REL_TOL * tau || hi - lo <= WAIT_REL_TOL * hi {
            break;
        }
    }
    tau
}

fn pick_channel<R: Rng + ?Sized>(flow: &NoJumpFlow, lo_sign: Sign, q: [f64; 2], rng: &mut R) -> Channel {
    let r = flow.channel_rates(q);
    let total = r[0] + r[1] + r[2];
    let v = rng.random::<f64>() * total;
    let (opposite, same) = match lo_sign {
        Sign::Plus => (Channel::SideMinus, Channel::SidePlus),
        Sign::Minus => (Channel::SidePlus, Channel::SideMinus),
    };
    if v < r[0] {
        opposite
    } else if v < r[0] + r[1] {
        Channel::Central
    } else {
        same
    }
}

/// Draw the delay to the next detection and its channel from `s0`.
pub fn sample_waiting_time<R: Rng + ?Sized>(s0: &SaidState, eta: f64, gamma: f64, rng: &mut R) -> WaitingTime {
    if eta <= 0.0 {
        return WaitingTime::Never;
    }
    let flow = NoJumpFlow::new(eta, gamma);
    sample_with_flow(&flow, s0, rng)
}

fn sample_with_flow<R: Rng + ?Sized>(flow: &NoJumpFlow, s0: &SaidState, rng: &mut R) -> WaitingTime {
    if flow.eta <= 0.0 {
        return WaitingTime::Never;
    }
    let p = s0.normalized().lo_coords();
    // 1 − U lies in (0, 1], so ln never sees zero
    let u = 1.0 - rng.random::<f64>();
    let tau = invert_survival(flow, p, u);
    let q = flow.evolve_normalized(p, tau);
    WaitingTime::Jump { tau, channel: pick_channel(flow, s0.lo_sign, q, rng) }
}

/// Event-driven SAID process that can be queried at ascending times.
#[derive(Clone, Debug)]
pub struct SaidProcess {
    flow: NoJumpFlow,
    /// Normalized state at the start of the current no-jump interval.
    start: SaidState,
    next: Option<(f64, Channel)>,
    jumps: u64,
    log: Option<Vec<JumpEvent>>,
}

impl SaidProcess {
    pub fn new<R: Rng + ?Sized>(eta: f64, gamma: f64, initial: SaidState, rng: &mut R) -> Self {
        let mut p = SaidProcess {
            flow: NoJumpFlow::new(eta, gamma),
            start: initial.normalized(),
            next: None,
            jumps: 0,
            log: None,
        };
        p.schedule(rng);
        p
    }

    /// Keep every jump event (memory grows with the run length).
    pub fn record_jumps(mut self) -> Self {
        self.log = Some(Vec::new());
        self
    }

    fn schedule<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.next = match sample_with_flow(&self.flow, &self.start, rng) {
            WaitingTime::Never => None,
            WaitingTime::Jump { tau, channel } => Some((self.start.t_last_jump + tau, channel)),
        };
    }

    /// Apply all jumps up to and including `t`, then return the normalized state at `t`.
    pub fn advance_to<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) -> SaidState {
        while let Some((tj, channel)) = self.next {
            if tj > t {
                break;
            }
            let post = channel.post_state(self.start.lo_sign);
            self.start = SaidState::after_jump(post, tj);
            self.jumps += 1;
            if let Some(log) = self.log.as_mut() {
                log.push(JumpEvent { time: tj, channel, post_state: post });
            }
            self.schedule(rng);
        }
        let q = self.flow.evolve_normalized(self.start.lo_coords(), t - self.start.t_last_jump);
        self.start.with_lo_coords(q)
    }

    /// Jump through the next detection and return it, or `None` when η = 0.
    pub fn next_jump<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<JumpEvent> {
        let (time, channel) = self.next?;
        let post_state = channel.post_state(self.start.lo_sign);
        self.advance_to(time, rng);
        Some(JumpEvent { time, channel, post_state })
    }

    pub fn jump_count(&self) -> u64 {
        self.jumps
    }

    pub fn jumps(&self) -> &[JumpEvent] {
        self.log.as_deref().unwrap_or(&[])
    }

    /// Time of the last jump (or of the initial state).
    pub fn last_jump_time(&self) -> f64 {
        self.start.t_last_jump
    }
}

/// Run one SAID trajectory from `initial` and report the state at `times`
/// (ascending).
pub fn run_said_trajectory<R: Rng + ?Sized>(
    eta: f64,
    gamma: f64,
    initial: SaidState,
    times: &[f64],
    stream: u64,
    rng: &mut R,
) -> TrajectoryRecord {
    let mut proc = SaidProcess::new(eta, gamma, initial, rng);
    let samples = times
        .iter()
        .map(|&t| Sample { t, state: proc.advance_to(t, rng).to_bloch() })
        .collect();
    TrajectoryRecord { stream, samples, events: proc.jump_count() }
}

fn check_eta(eta: f64) -> Result<(), OracleError> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(OracleError::Domain { name: "eta", value: eta, domain: "(0, 1]" });
    }
    Ok(())
}

/// Long-run time average of `⟨σx⟩²` along a SAID trajectory, `E[x²]`.
///
/// Every jump restarts the same no-jump cycle from a pure eigenstate, so by
/// the renewal-reward theorem the time average is
/// `∫₀^∞ x(τ)² S(τ) dτ / ∫₀^∞ S(τ) dτ`.
pub fn said_ex2_analytic(eta: f64, tol: f64) -> Result<f64, OracleError> {
    check_eta(eta)?;
    let flow = NoJumpFlow::new(eta, 1.0);
    let p0 = [1.0, 0.0];
    let mean_cycle = flow.survival_integral(p0);
    let scale = 1.0 / flow.decay_rate();
    let num = integrate_semi_infinite(
        |u| {
            let q = flow.evolve(p0, u * scale);
            let s = q[0] + q[1];
            if s == 0.0 {
                return 0.0;
            }
            let x = (q[0] - q[1]) / s;
            x * x * s
        },
        0.0,
        0.5 * tol * mean_cycle / scale,
    )?;
    Ok((num.value * scale / mean_cycle).clamp(0.0, 1.0))
}

/// `E[x²]` weighted by the waiting-time density, `∫₀^∞ x(τ)² p(τ) dτ`: the
/// mean purity seen just before each detection.
pub fn said_ex2_jump_weighted(eta: f64, tol: f64) -> Result<f64, OracleError> {
    check_eta(eta)?;
    let flow = NoJumpFlow::new(eta, 1.0);
    let p0 = [1.0, 0.0];
    let scale = 1.0 / flow.decay_rate();
    let r = integrate_semi_infinite(
        |u| {
            let q = flow.evolve(p0, u * scale);
            let s = q[0] + q[1];
            if s == 0.0 {
                return 0.0;
            }
            let x = (q[0] - q[1]) / s;
            x * x * 0.25 * eta * (5.0 * q[0] + q[1])
        },
        0.0,
        tol / scale,
    )?;
    Ok((r.value * scale).clamp(0.0, 1.0))
}
