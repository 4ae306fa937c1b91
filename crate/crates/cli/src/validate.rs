//! Invariant suite behind `qjump validate`.

use std::f64::consts::{FRAC_PI_3, TAU};

use num_complex::Complex64;
use qjump::beta_oracle::{beta_drift_diffusion, expected_beta, expected_beta_direct};
use qjump::homodyne::{
    decomposed_qsd_noise, run_homodyne_trajectory, sample_noise, secular_y_step_signed, DiffusiveSpec, LabStepper,
    NoiseIncrement, SecularYStepper,
};
use qjump::lindblad::{default_dt, max_lab_dt, propagate_to, secular_liouvillian, Frame};
use qjump::null_model::null_model_steering;
use qjump::rng::{domain, substream, SimRng};
use qjump::said::{run_said_trajectory, said_ex2_analytic, SaidState, Sign};
use qjump::state::{apply_jump, steering_functionals};
use qjump::stats::Moments;
use qjump::steering::{
    bin_estimate, build_ensemble, simulate_bob_outcomes, steering_sum, Axis, BinSpec, BobModel, ConditionedEnsemble,
    ConditionedRecord, EnsembleConfig, Functional, Pair, Scheme, SteeringOptions,
};
use qjump::{BlochState, JumpKind, JumpOperator};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// `None` when the check could not be evaluated (see `detail`).
    pub discrepancy: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub all_pass: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

type Outcome = Result<(f64, Option<String>), String>;

struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    /// Record a check that passes when `discrepancy <= tolerance`.
    fn run(&mut self, name: &str, tolerance: f64, f: impl FnOnce() -> Outcome) {
        let check = match f() {
            Ok((d, detail)) => Check { name: name.into(), pass: d <= tolerance, discrepancy: Some(d), tolerance, detail },
            Err(e) => Check { name: name.into(), pass: false, discrepancy: None, tolerance, detail: Some(e) },
        };
        self.checks.push(check);
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rng(seed: u64, check: u64, index: u64) -> SimRng {
    substream(seed, domain::VALIDATE ^ (check << 8), index)
}

fn ball_state(rng: &mut SimRng) -> BlochState {
    let r = rng.random::<f64>().cbrt();
    let ct: f64 = rng.random_range(-1.0..=1.0);
    let ph = rng.random_range(0.0..TAU);
    let st = (1.0 - ct * ct).sqrt();
    BlochState::normalized(r * st * ph.cos(), r * st * ph.sin(), r * ct)
}

pub fn run_validate(cfg: &RunConfig) -> Result<ValidationReport, CliError> {
    cfg.validate()?;
    let v = &cfg.validate;
    let seed = cfg.seed;
    let gamma = cfg.sampling.gamma;
    let omega = cfg.omega;
    let lab_dt = cfg.dt.unwrap_or_else(|| default_dt(Frame::Lab, omega));
    let sec_dt = cfg.dt.unwrap_or_else(|| default_dt(Frame::Secular, omega));
    let mut s = Suite { checks: Vec::new() };

    s.run("functional_bound", 1e-12, || {
        let mut r = rng(seed, 1, 0);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..v.fuzz_samples {
            let f = steering_functionals(&ball_state(&mut r)).map_err(err)?;
            worst = worst.max(f.f1 + f.f2 - 1.0);
        }
        Ok((worst.max(0.0), Some(format!("max f1 + f2 − 1 = {worst:.3e}"))))
    });

    s.run("functional_convexity", 1e-12, || {
        let mut r = rng(seed, 2, 0);
        let mut worst: f64 = 0.0;
        for _ in 0..v.fuzz_samples {
            let (a, b, l) = (ball_state(&mut r), ball_state(&mut r), r.random::<f64>());
            let m = steering_functionals(&BlochState::mix(l, &a, &b)).map_err(err)?;
            let fa = steering_functionals(&a).map_err(err)?;
            let fb = steering_functionals(&b).map_err(err)?;
            worst = worst.max(m.f1 - (l * fa.f1 + (1.0 - l) * fb.f1));
            worst = worst.max(m.f2 - (l * fa.f2 + (1.0 - l) * fb.f2));
        }
        Ok((worst, None))
    });

    s.run("trace_positivity", 1e-9, || {
        let mut r = rng(seed, 3, 0);
        let kinds = [
            JumpKind::LowerPlusMinus,
            JumpKind::LowerMinusPlus,
            JumpKind::SigmaX,
            JumpKind::ProjectorPlus,
            JumpKind::ProjectorMinus,
            JumpKind::SigmaMinus,
        ];
        let spec = DiffusiveSpec::x_homodyne(0.8);
        let lab = LabStepper::new(&spec, omega, gamma).map_err(err)?;
        let sec = SecularYStepper::new(0.8, gamma);
        let ysec = DiffusiveSpec::secular_y(0.8);
        let mut worst: f64 = 0.0;
        for _ in 0..(v.fuzz_samples / 100).max(10) {
            let st = ball_state(&mut r);
            for k in kinds {
                let out = apply_jump(&st, &JumpOperator::new(k, 1.0));
                worst = worst.max(-out.w).max(out.positivity_overshoot());
            }
            for frame in [Frame::Lab, Frame::Secular] {
                let p = propagate_to(&st, frame, omega, gamma, 1e-2, 1.0).map_err(err)?;
                worst = worst.max((p.w - 1.0).abs()).max(p.positivity_overshoot());
            }
            let a = lab.step(&st, &sample_noise(&spec, lab_dt, &mut r).map_err(err)?, lab_dt).map_err(err)?;
            let b = sec.step(&st, &sample_noise(&ysec, sec_dt, &mut r).map_err(err)?, sec_dt).map_err(err)?;
            for o in [a, b] {
                worst = worst.max((o.w - 1.0).abs()).max(o.positivity_overshoot());
            }
        }
        Ok((worst, None))
    });

    s.run("lab_trajectory_positivity", 0.0, || {
        let times = [20.0];
        let failed = (0..8u64)
            .into_par_iter()
            .filter(|&i| {
                let spec = if i % 2 == 0 { DiffusiveSpec::x_homodyne(1.0) } else { DiffusiveSpec::y_homodyne(1.0) };
                let start = BlochState::normalized(0.0, 0.0, -1.0);
                run_homodyne_trajectory(&spec, omega, gamma, lab_dt, start, &times, i, &mut rng(seed, 4, i)).is_err()
            })
            .count();
        Ok((failed as f64, Some(format!("{failed} of 8 unit-efficiency trajectories left the state space"))))
    });

    s.run("said_x_diagonal_closure", 0.0, || {
        let mut worst: f64 = 0.0;
        let mut r = rng(seed, 5, 0);
        for _ in 0..1000 {
            let x: f64 = r.random_range(-1.0..=1.0);
            let d = secular_liouvillian(&BlochState::normalized(x, 0.0, 0.0), gamma);
            worst = worst.max(d.y.abs()).max(d.z.abs());
        }
        let times: Vec<f64> = (0..200).map(|k| 0.1 * k as f64).collect();
        for i in 0..16u64 {
            let mut r = rng(seed, 5, i + 1);
            let eta = (i as f64 + 1.0) / 16.0;
            let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
            let rec = run_said_trajectory(eta, gamma, SaidState::after_jump(sign, 0.0), &times, i, &mut r);
            for smp in &rec.samples {
                worst = worst.max(smp.state.y.abs()).max(smp.state.z.abs());
            }
        }
        Ok((worst, None))
    });

    s.run("secular_y_confinement", 1e-14, || {
        let mut r = rng(seed, 6, 0);
        let spec = DiffusiveSpec::secular_y(0.9);
        let stepper = SecularYStepper::new(0.9, gamma);
        let mut rho = BlochState::MAXIMALLY_MIXED;
        let mut worst: f64 = 0.0;
        for _ in 0..v.confinement_steps {
            let noise = sample_noise(&spec, sec_dt, &mut r).map_err(err)?;
            rho = stepper.step(&rho, &noise, sec_dt).map_err(err)?;
            worst = worst.max(rho.x.abs());
        }
        Ok((worst, Some(format!("{} steps at dt = {sec_dt}", v.confinement_steps))))
    });

    s.run("bias_corrected_zero", 4.0, || {
        let n = 8;
        let mixed = BlochState::MAXIMALLY_MIXED;
        let mut m = Moments::new();
        for k in 0..20_000u64 {
            let bob = simulate_bob_outcomes(&mixed, &Axis::ALL, n, &mut rng(seed, 7, k));
            let rec = ConditionedRecord { trajectory: 0, halt_time: 20.0, label: vec![0.0], state: mixed, bob, weight: 1.0 };
            let e = ConditionedEnsemble { scheme: "said".into(), eta: 0.0, omega, records: vec![rec] };
            m.push(bin_estimate(&e, Functional::F1, &BinSpec::X { n: 1 }, BobModel::Sampled).map_err(err)?.value);
        }
        let z = m.mean.abs() / m.std_error();
        Ok((z, Some(format!("mean {:.3e} over 20000 bins of {n} outcomes, in standard errors", m.mean))))
    });

    s.run("determinism", 0.0, || {
        let small = EnsembleConfig { n_traj: 6, records_per_traj: 30, ..cfg.ensemble() };
        let run = |threads: usize| -> Result<String, String> {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(err)?;
            pool.install(|| {
                let mut out = String::new();
                for scheme in Scheme::ALL {
                    let e = build_ensemble(scheme, 0.7, &small).map_err(err)?;
                    out += &serde_json::to_string(&e).map_err(err)?;
                }
                let a = build_ensemble(Scheme::Said, 0.7, &small).map_err(err)?;
                let b = build_ensemble(Scheme::YSecular, 0.7, &small).map_err(err)?;
                let r = steering_sum(&a, &b, &SteeringOptions::for_pair(Pair::SaidY, seed)).map_err(err)?;
                out += &serde_json::to_string(&r).map_err(err)?;
                Ok(out)
            })
        };
        let first = run(1)?;
        let again = run(1)?;
        let wide = run(cfg.workers.unwrap_or(4).max(2))?;
        let mismatches = [first != again, first != wide].iter().filter(|&&b| b).count();
        Ok((mismatches as f64, Some("repeat and thread-count reruns compared byte for byte".into())))
    });

    let t_last = cfg.t_final.unwrap_or(20.0);
    for scheme in Scheme::ALL {
        s.run(&format!("me_average_{}", scheme.name()), 4.0, || {
            let times = [1.0, 5.0, t_last];
            let z = me_average_z(scheme, 0.8, omega, gamma, lab_dt, sec_dt, &times, v.me_trajectories, seed)?;
            Ok((z, Some(format!("largest deviation in standard errors over t = {times:?}"))))
        });
    }

    s.run("oracle_said_mc", 3.0, || {
        let c = EnsembleConfig { n_traj: 256, ..cfg.ensemble() };
        let est = build_ensemble(Scheme::Said, 0.5, &c).map_err(err)?.purity().ok_or("empty ensemble")?;
        let want = said_ex2_analytic(0.5, 1e-10).map_err(err)?;
        Ok((est.z_score(want), Some(format!("E[x²] at η = 0.5: {:.6} ± {:.6} vs {want:.6}", est.value, est.std_error))))
    });

    s.run("oracle_beta_mc", 3.0, || {
        let c = EnsembleConfig { n_traj: 128, ..cfg.ensemble() };
        let est = build_ensemble(Scheme::YSecular, 0.6, &c).map_err(err)?.purity().ok_or("empty ensemble")?;
        let want = expected_beta(0.6, 1e-10).map_err(err)?.value;
        Ok((est.z_score(want), Some(format!("E[β] at η = 0.6: {:.6} ± {:.6} vs {want:.6}", est.value, est.std_error))))
    });

    s.run("oracle_routes", 1e-8, || {
        let mut worst: f64 = 0.0;
        for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let a = expected_beta(eta, 1e-12).map_err(err)?.value;
            let b = expected_beta_direct(eta, 1e-12).map_err(err)?;
            worst = worst.max((a - b).abs());
        }
        Ok((worst, Some("E[β] by the density mean and by the closed-form integral".into())))
    });

    s.run("said_unit_limit", 1e-6, || Ok(((said_ex2_analytic(1.0, 1e-10).map_err(err)? - 1.0).abs(), None)));

    s.run("ordering", 0.0, || {
        let mut worst = f64::NEG_INFINITY;
        for k in 1..=20 {
            let eta = k as f64 / 20.0;
            let d = expected_beta(eta, 1e-10).map_err(err)?.value - said_ex2_analytic(eta, 1e-10).map_err(err)?;
            worst = worst.max(d);
        }
        Ok((worst.max(0.0), Some(format!("max E[β] − E[x²] = {worst:.3e}"))))
    });

    s.run("noise_moments", 5.0, || {
        let specs = [
            DiffusiveSpec::qsd(),
            DiffusiveSpec::x_homodyne(1.0),
            DiffusiveSpec::y_homodyne(0.7),
            DiffusiveSpec::general(0.7, Complex64::from_polar(0.3, FRAC_PI_3)).map_err(err)?,
            DiffusiveSpec::general(0.5, Complex64::new(0.0, -0.2)).map_err(err)?,
        ];
        let dt = 1e-2;
        let mut worst: f64 = 0.0;
        for (k, spec) in specs.iter().enumerate() {
            let mut r = rng(seed, 9, k as u64);
            let draws = (0..v.noise_draws).map(|_| sample_noise(spec, dt, &mut r).map(|n| n.dz));
            let z = moment_z(draws, dt, spec.eta, spec.upsilon).map_err(err)?;
            worst = worst.max(z);
        }
        Ok((worst, Some("largest moment deviation in standard errors".into())))
    });

    s.run("noise_decomposition", 5.0, || {
        let part = DiffusiveSpec::general(0.6, Complex64::new(0.3, 0.1)).map_err(err)?;
        let dt = 1e-2;
        let mut r = rng(seed, 10, 0);
        let draws = (0..v.noise_draws).map(|_| decomposed_qsd_noise(&part, dt, &mut r));
        let z = moment_z(draws, dt, 1.0, Complex64::new(0.0, 0.0)).map_err(err)?;
        Ok((z, Some("sum of (0.6, 0.3+0.1i) and its complement against QSD moments".into())))
    });

    s.run("beta_drift", 4.0, || {
        let sign = if v.inject_sideband_flip { -1.0 } else { 1.0 };
        let z = beta_drift_z(0.7, gamma, sign, seed)?;
        let note = if v.inject_sideband_flip { "sideband sign flipped; " } else { "" };
        Ok((z, Some(format!("{note}largest drift/variance deviation in standard errors"))))
    });

    s.run("dt_resolution", 1.0, || {
        let ratio = lab_dt / max_lab_dt(omega / gamma);
        Ok((ratio, Some(format!("lab dt {lab_dt} against limit {}", max_lab_dt(omega / gamma)))))
    });

    s.run("dt_refinement", 2e-3, || {
        let lab = LabStepper::new(&DiffusiveSpec::x_homodyne(0.0), omega, gamma).map_err(err)?;
        let sec = SecularYStepper::new(0.0, gamma);
        let starts = [BlochState::normalized(0.0, 0.0, -1.0), BlochState::normalized(0.0, 0.0, 1.0), BlochState::normalized(0.3, 0.4, -0.5)];
        let t = 5.0;
        // largest step-halving change over the starts, sampled at whole times up to t
        let change = |dt: f64, step: &dyn Fn(&BlochState, f64) -> BlochState| -> Result<f64, String> {
            let mut worst: f64 = 0.0;
            for start in starts {
                let (mut coarse, mut fine) = (start, start);
                let n = (1.0 / dt).round() as u64;
                for _ in 0..t as u64 {
                    for _ in 0..n {
                        coarse = step(&coarse, dt).normalize().map_err(err)?.0;
                        fine = step(&step(&fine, dt / 2.0).normalize().map_err(err)?.0, dt / 2.0).normalize().map_err(err)?.0;
                    }
                    worst = worst.max(coarse.max_abs_diff(&fine));
                }
            }
            Ok(worst)
        };
        let lab_step = |r: &BlochState, dt: f64| lab.update(r, &NoiseIncrement::ZERO, dt).0;
        let sec_step = |r: &BlochState, dt: f64| sec.update(r, &NoiseIncrement::ZERO, dt);
        let d_lab = change(lab_dt, &lab_step)?;
        let d_sec = change(sec_dt, &sec_step)?;
        Ok((d_lab.max(d_sec), Some(format!("step-halving change up to t = {t}: lab {d_lab:.3e}, secular {d_sec:.3e}"))))
    });

    s.run("null_model_bound", 3.0, || {
        let c = EnsembleConfig { n_traj: v.null_trajectories, records_per_traj: 100, ..cfg.ensemble() };
        let r = null_model_steering(0.5, 0.5, &c, &SteeringOptions::for_pair(Pair::SaidY, seed)).map_err(err)?;
        let excess = (r.s_value - 1.0) / r.mc_error;
        Ok((excess, Some(format!("S = {:.4} ± {:.4} at η_S = η_Y = 0.5, excess in bootstrap errors", r.s_value, r.mc_error))))
    });

    let all_pass = s.checks.iter().all(|c| c.pass);
    Ok(ValidationReport { seed, all_pass, checks: s.checks })
}

/// Largest z-score of `|dZ|²`, `Re dZ²` and `Im dZ²` (per `dt`) against `(η, υ)`.
fn moment_z<E>(draws: impl Iterator<Item = Result<Complex64, E>>, dt: f64, eta: f64, upsilon: Complex64) -> Result<f64, E> {
    let (mut abs2, mut re2, mut im2) = (Moments::new(), Moments::new(), Moments::new());
    for dz in draws {
        let dz = dz?;
        abs2.push(dz.norm_sqr() / dt);
        let sq = dz * dz / dt;
        re2.push(sq.re);
        im2.push(sq.im);
    }
    let z = |m: &Moments, want: f64| {
        let d = (m.mean - want).abs();
        if d < 1e-15 {
            0.0
        } else {
            d / m.std_error()
        }
    };
    Ok(z(&abs2, eta).max(z(&re2, upsilon.re)).max(z(&im2, upsilon.im)))
}

/// One-step β increments of the secular Y update against the β SDE, at a
/// random phase for each draw.
fn beta_drift_z(eta: f64, gamma: f64, sign: f64, seed: u64) -> Result<f64, String> {
    let dt = 1e-3;
    let n = 400_000u64;
    let spec = DiffusiveSpec::secular_y(eta);
    let zs = [0.2f64, 0.5, 0.8]
        .par_iter()
        .enumerate()
        .map(|(k, &beta)| -> Result<f64, String> {
            let mut r = rng(seed, 11, k as u64);
            let (mut inc, mut sq) = (Moments::new(), Moments::new());
            for _ in 0..n {
                let th = r.random_range(0.0..TAU);
                let s = BlochState::normalized(0.0, beta.sqrt() * th.cos(), beta.sqrt() * th.sin());
                let noise = sample_noise(&spec, dt, &mut r).map_err(err)?;
                let d = secular_y_step_signed(&s, eta, gamma, dt, &noise, sign).map_err(err)?.beta() - beta;
                inc.push(d);
                sq.push(d * d);
            }
            let (a, b) = beta_drift_diffusion(beta, eta).map_err(err)?;
            let za = (inc.mean - gamma * a * dt).abs() / inc.std_error();
            let zb = (sq.mean - gamma * b * dt).abs() / sq.std_error();
            Ok(za.max(zb))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(zs.into_iter().fold(0.0, f64::max))
}

/// Largest component z-score of the conditioned-ensemble mean against the
/// master equation of the scheme's frame.
#[allow(clippy::too_many_arguments)]
pub fn me_average_z(
    scheme: Scheme,
    eta: f64,
    omega: f64,
    gamma: f64,
    lab_dt: f64,
    sec_dt: f64,
    times: &[f64],
    n_traj: usize,
    seed: u64,
) -> Result<f64, String> {
    let generic = BlochState::normalized(0.3, 0.4, -0.5);
    let start = if scheme == Scheme::Said { BlochState::plus() } else { generic };
    let states: Vec<Vec<BlochState>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = substream(seed, domain::VALIDATE ^ 0xAE ^ ((scheme as u64) << 4), i);
            let rec = match scheme {
                Scheme::Said => run_said_trajectory(eta, gamma, SaidState::after_jump(Sign::Plus, 0.0), times, i, &mut r),
                Scheme::YSecular => {
                    run_homodyne_trajectory(&DiffusiveSpec::secular_y(eta), omega, gamma, sec_dt, start, times, i, &mut r)
                        .map_err(err)?
                }
                Scheme::XLab | Scheme::YLab => {
                    let spec = if scheme == Scheme::XLab { DiffusiveSpec::x_homodyne(eta) } else { DiffusiveSpec::y_homodyne(eta) };
                    run_homodyne_trajectory(&spec, omega, gamma, lab_dt, start, times, i, &mut r).map_err(err)?
                }
            };
            Ok(rec.samples.into_iter().map(|s| s.state).collect())
        })
        .collect::<Result<_, String>>()?;
    let mut worst: f64 = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let me = propagate_to(&start, scheme.frame(), omega, gamma, 1e-3, t).map_err(err)?;
        for (c, want) in [me.x, me.y, me.z].into_iter().enumerate() {
            let m: Moments = states.iter().map(|s| s[k].expectations()[c]).collect();
            let d = (m.mean - want).abs();
            if d > 0.0 {
                worst = worst.max(d / m.std_error());
            }
        }
    }
    Ok(worst)
}
