//! Simultaneous SAID and Y-homodyne monitoring of one atom.
//!
//! A fraction `η_S` of the fluorescence goes to a SAID detector and `η_Y` to a
//! Y-homodyne detector (`η_S + η_Y ≤ 1`). Three filters run on the same
//! records: the full filter (both records, the atom's best state and the one
//! Bob measures), a SAID-only filter and a Y-only filter. Alice's labels come
//! from the partial filters, so both ensembles are coarse-grainings of one
//! objective ensemble and `S ≤ 1` must hold.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::homodyne::{kraus_update, secular_y_channels, SecularYStepper};
use crate::lindblad::Frame;
use crate::operator::PauliOp;
use crate::rng::{domain, substream};
use crate::said::{NoJumpFlow, SaidState, Sign};
use crate::state::BlochState;
use crate::steering::{
    simulate_bob_outcomes, steering_sum, Axis, ConditionedEnsemble, ConditionedRecord, EnsembleConfig,
    SteeringOptions, SteeringResult,
};
use crate::{ConfigError, SimError, SteeringError};

/// States of the three filters at one sample time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterSample {
    pub t: f64,
    pub full: BlochState,
    pub said_only: BlochState,
    pub y_only: BlochState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullTrajectory {
    pub stream: u64,
    pub samples: Vec<FilterSample>,
    pub jumps: u64,
}

struct Ops {
    /// SAID detector operators for LO sign `+`/`−`, in order `(|−⟩⟨+|, σx ± 1, |+⟩⟨−|)`.
    said: [[PauliOp; 3]; 2],
    y: [PauliOp; 3],
    unmonitored: [PauliOp; 3],
    k_eff: [PauliOp; 2],
}

impl Ops {
    fn new(eta_s: f64, eta_y: f64, gamma: f64) -> Self {
        let k = (0.25 * gamma).sqrt();
        let side_m = PauliOp::sigma_minus_plus().scaled(k);
        let side_p = PauliOp::sigma_plus_minus().scaled(k);
        let central = |lo: f64| (PauliOp::sigma_x() + PauliOp::identity().scaled(lo)).scaled(k);
        let said = [[side_m, central(1.0), side_p], [side_m, central(-1.0), side_p]];
        let y = secular_y_channels(gamma, 1.0);
        let unmonitored = [side_m, PauliOp::sigma_x().scaled(k), side_p];
        let dag = |ops: &[PauliOp], w: f64| {
            ops.iter().fold(PauliOp::zero(), |acc, l| acc + l.adjoint().product(l).scaled(0.5 * w))
        };
        let rest = 1.0 - eta_s - eta_y;
        let k_eff = [0, 1].map(|i| dag(&said[i], eta_s) + dag(&y, eta_y) + dag(&unmonitored, rest));
        Ops { said, y, unmonitored, k_eff }
    }
}

fn lo_index(lo: Sign) -> usize {
    match lo {
        Sign::Plus => 0,
        Sign::Minus => 1,
    }
}

/// Run the three filters from `I/2` and sample them at `times` (ascending).
pub fn simulate_null_trajectory<R: Rng + ?Sized>(
    eta_s: f64,
    eta_y: f64,
    gamma: f64,
    dt: f64,
    times: &[f64],
    stream: u64,
    rng: &mut R,
) -> Result<NullTrajectory, SimError> {
    if !(eta_s >= 0.0 && eta_y >= 0.0 && eta_s + eta_y <= 1.0 + 1e-12) {
        return Err(ConfigError::Invalid { name: "eta_s + eta_y", value: eta_s + eta_y, reason: "must lie in [0, 1]" }.into());
    }
    let ops = Ops::new(eta_s, eta_y, gamma);
    let said_flow = NoJumpFlow::new(eta_s, gamma);
    let y_filter = SecularYStepper::new(eta_y, gamma);
    let sy = eta_y.sqrt();
    let rest = (1.0 - eta_s - eta_y).max(0.0);
    let sdt = dt.sqrt();

    let mut full = BlochState::MAXIMALLY_MIXED;
    let mut y_only = BlochState::MAXIMALLY_MIXED;
    let mut lo = Sign::Plus;
    let mut said_start = SaidState { w_plus: 0.5, w_minus: 0.5, lo_sign: Sign::Plus, t_last_jump: 0.0 };
    let mut step: u64 = 0;
    let mut jumps = 0;
    let mut samples = Vec::with_capacity(times.len());

    let fail = |step: u64, source| SimError::Step { step, t: step as f64 * dt, source };

    for &t in times {
        let target = (t / dt).round().max(0.0) as u64;
        while step < target {
            let said_ops = &ops.said[lo_index(lo)];
            let rates = said_ops.map(|b| eta_s * b.sandwich(&full).w);
            let total: f64 = rates.iter().sum();
            let dv1: f64 = rng.sample::<f64, _>(StandardNormal) * sdt;
            let dv2: f64 = rng.sample::<f64, _>(StandardNormal) * sdt;
            let dwx: f64 = rng.sample::<f64, _>(StandardNormal) * sdt;
            let dy = [
                dv1 + sy * ops.y[0].anticomm_sum(&full).w * dt,
                dv2 + sy * ops.y[1].anticomm_sum(&full).w * dt,
            ];
            let u: f64 = rng.random();
            step += 1;
            if u < total * dt {
                let v = rng.random::<f64>() * total;
                let j = if v < rates[0] {
                    0
                } else if v < rates[0] + rates[1] {
                    1
                } else {
                    2
                };
                let post = match j {
                    0 => Sign::Minus,
                    2 => Sign::Plus,
                    _ => lo,
                };
                full = said_ops[j].sandwich(&full).normalize().map_err(|e| fail(step, e))?.0;
                lo = post;
                said_start = SaidState::after_jump(post, step as f64 * dt);
                jumps += 1;
            } else {
                let monitored = [(ops.y[0], sy, dy[0]), (ops.y[1], sy, dy[1]), (ops.y[2], sy, dwx)];
                let unmon = ops.unmonitored.map(|l| (l, rest));
                let raw = kraus_update(&full, &ops.k_eff[lo_index(lo)], &monitored, &unmon, dt);
                full = raw.normalize().map_err(|e| fail(step, e))?.0.enforce_positivity().map_err(|e| fail(step, e))?;
            }
            let raw = y_filter.update_with_records(&y_only, dy, dwx, dt);
            y_only = raw.normalize().map_err(|e| fail(step, e))?.0;
        }
        let now = step as f64 * dt;
        let said_only = if eta_s > 0.0 {
            let p = match said_start.lo_sign {
                Sign::Plus => [said_start.w_plus, said_start.w_minus],
                Sign::Minus => [said_start.w_minus, said_start.w_plus],
            };
            let q = said_flow.evolve_normalized(p, now - said_start.t_last_jump);
            let x = said_start.lo_sign.value() * (q[0] - q[1]);
            BlochState::normalized(x, 0.0, 0.0)
        } else {
            // no SAID light: the partial filter follows the secular master equation
            let x0 = said_start.w_plus - said_start.w_minus;
            BlochState::normalized(x0 * (-0.5 * gamma * now).exp(), 0.0, 0.0)
        };
        samples.push(FilterSample { t: now, full, said_only, y_only });
    }
    Ok(NullTrajectory { stream, samples, jumps })
}

/// Alice's two ensembles from simultaneous monitoring: `A` labelled by the
/// SAID-only filter, `B` by the Y-only filter. Bob measures the true state.
pub fn build_null_ensembles(
    eta_s: f64,
    eta_y: f64,
    cfg: &EnsembleConfig,
) -> Result<(ConditionedEnsemble, ConditionedEnsemble), SimError> {
    cfg.validate()?;
    let dt = cfg.dt_for(Frame::Secular);
    let per: Vec<(Vec<ConditionedRecord>, Vec<ConditionedRecord>)> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, domain::NULL_MODEL, i);
            let times = cfg.halt_times(&mut rng);
            let tr = simulate_null_trajectory(eta_s, eta_y, cfg.gamma, dt, &times, i, &mut rng)?;
            let mut bob = substream(cfg.seed, domain::BOB ^ domain::NULL_MODEL, i);
            let mut a = Vec::with_capacity(tr.samples.len());
            let mut b = Vec::with_capacity(tr.samples.len());
            for s in &tr.samples {
                a.push(ConditionedRecord {
                    trajectory: i,
                    halt_time: s.t,
                    label: vec![s.said_only.x],
                    state: s.full,
                    bob: simulate_bob_outcomes(&s.full, &Axis::ALL, cfg.bob_per_axis, &mut bob),
                    weight: 1.0,
                });
                b.push(ConditionedRecord {
                    trajectory: i,
                    halt_time: s.t,
                    label: vec![s.y_only.y, s.y_only.z],
                    state: s.full,
                    bob: simulate_bob_outcomes(&s.full, &Axis::ALL, cfg.bob_per_axis, &mut bob),
                    weight: 1.0,
                });
            }
            Ok((a, b))
        })
        .collect::<Result<_, SimError>>()?;
    let (a, b): (Vec<_>, Vec<_>) = per.into_iter().unzip();
    let ens = |name: &str, eta, recs: Vec<Vec<ConditionedRecord>>| ConditionedEnsemble {
        scheme: name.to_string(),
        eta,
        omega: cfg.omega,
        records: recs.into_iter().flatten().collect(),
    };
    Ok((ens("null_said", eta_s, a), ens("null_y", eta_y, b)))
}

/// `S` estimated on the doubly conditioned ensembles.
pub fn null_model_steering(
    eta_s: f64,
    eta_y: f64,
    cfg: &EnsembleConfig,
    opts: &SteeringOptions,
) -> Result<SteeringResult, SteeringError> {
    let (a, b) = build_null_ensembles(eta_s, eta_y, cfg)?;
    steering_sum(&a, &b, opts)
}
