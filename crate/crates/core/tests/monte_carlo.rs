//! Statistical checks of the samplers and steppers. Tolerances are in
//! Monte Carlo standard errors.

use num_complex::Complex64;
use qjump::beta_oracle::beta_drift_diffusion;
use qjump::homodyne::{
    beta_noise, run_homodyne_trajectory, sample_noise, secular_y_step, DiffusiveSpec, LabStepper, NoiseIncrement,
};
use qjump::lindblad::{exact_liouvillian, lab_steady_state, propagate_to, Frame};
use qjump::rng::substream;
use qjump::said::{
    nojump_derivative, run_said_trajectory, sample_waiting_time, said_ex2_analytic, Channel, NoJumpFlow,
    SaidProcess, SaidState, Sign, WaitingTime,
};
use qjump::stats::{block_estimate, Moments};
use qjump::steering::{simulate_bob_outcomes, Axis};
use qjump::BlochState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn survival_is_the_trace_of_the_nojump_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let eta = rng.random_range(0.0..=1.0);
        let tau = rng.random_range(0.0..8.0);
        // RK4 on the derivative, independent of the closed form
        let mut s = SaidState::after_jump(Sign::Plus, 0.0);
        let n = 8000;
        let h = tau / n as f64;
        let f = |s: &SaidState| nojump_derivative(s, eta, 1.0);
        let add = |s: &SaidState, d: (f64, f64), k: f64| SaidState { w_plus: s.w_plus + k * d.0, w_minus: s.w_minus + k * d.1, ..*s };
        for _ in 0..n {
            let k1 = f(&s);
            let k2 = f(&add(&s, k1, h / 2.0));
            let k3 = f(&add(&s, k2, h / 2.0));
            let k4 = f(&add(&s, k3, h));
            s = SaidState {
                w_plus: s.w_plus + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
                w_minus: s.w_minus + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
                ..s
            };
        }
        let surv = NoJumpFlow::new(eta, 1.0).survival([1.0, 0.0], tau);
        assert!((surv - s.trace()).abs() <= 1e-10, "eta {eta} tau {tau}: {surv} vs {}", s.trace());
    }
}

#[test]
fn waiting_times_and_channels_match_quadrature() {
    for eta in [1.0, 0.5] {
        let flow = NoJumpFlow::new(eta, 1.0);
        let p0 = [1.0, 0.0];
        let t_max = 60.0 / flow.decay_rate();
        let mean = simpson(|t| t * flow.waiting_density(p0, t), 0.0, t_max, 200_000);
        let chan: Vec<f64> = (0..3)
            .map(|k| simpson(|t| flow.channel_rates(flow.evolve(p0, t))[k], 0.0, t_max, 200_000))
            .collect();
        assert!((chan.iter().sum::<f64>() - 1.0).abs() < 1e-9);

        let n = 1_000_000;
        let mut rng = substream(3, 0, 0);
        let s0 = SaidState::after_jump(Sign::Plus, 0.0);
        let mut tau = Moments::new();
        let mut counts = [0u64; 3];
        for _ in 0..n {
            match sample_waiting_time(&s0, eta, 1.0, &mut rng) {
                WaitingTime::Jump { tau: t, channel } => {
                    tau.push(t);
                    counts[match channel {
                        Channel::SideMinus => 0,
                        Channel::Central => 1,
                        Channel::SidePlus => 2,
                    }] += 1;
                }
                WaitingTime::Never => panic!("eta > 0 must jump"),
            }
        }
        let z = (tau.mean - mean).abs() / tau.std_error();
        assert!(z < 4.0, "eta {eta}: mean waiting time {} vs {mean} ({z:.2} SE)", tau.mean);
        for k in 0..3 {
            let f = counts[k] as f64 / n as f64;
            let se = (chan[k] * (1.0 - chan[k]) / n as f64).sqrt();
            assert!((f - chan[k]).abs() <= 4.0 * se, "eta {eta} channel {k}: {f} vs {}", chan[k]);
        }
    }
    assert_eq!(sample_waiting_time(&SaidState::after_jump(Sign::Plus, 0.0), 0.0, 1.0, &mut substream(0, 0, 0)), WaitingTime::Never);
}

#[test]
fn said_time_average_matches_quadrature_at_half_efficiency() {
    // about 6·10^5 jump cycles, sampled once per 1/γ
    let eta = 0.5;
    let per: Vec<f64> = (0..200u64)
        .map(|i| {
            let mut rng = substream(17, 1, i);
            let times: Vec<f64> = (0..5000).map(|k| 20.0 + k as f64).collect();
            let rec = run_said_trajectory(eta, 1.0, SaidState::after_jump(Sign::Plus, 0.0), &times, i, &mut rng);
            rec.mean_of(|s| s.x * s.x)
        })
        .collect();
    let est = block_estimate(&per);
    let want = said_ex2_analytic(eta, 1e-10).unwrap();
    assert!(est.z_score(want) < 3.0, "{} ± {} vs {want}", est.value, est.std_error);
}

#[test]
fn said_limits() {
    let times: Vec<f64> = (0..200).map(|k| 20.0 + k as f64 * 0.37).collect();
    let mut rng = substream(2, 0, 0);
    let pure = run_said_trajectory(1.0, 1.0, SaidState::after_jump(Sign::Minus, 0.0), &times, 0, &mut rng);
    assert!(pure.samples.iter().all(|s| (s.state.x.abs() - 1.0).abs() < 1e-12));
    let dark = run_said_trajectory(0.0, 1.0, SaidState::after_jump(Sign::Plus, 0.0), &times, 0, &mut rng);
    assert_eq!(dark.events, 0);
    assert!(dark.samples.iter().all(|s| s.state.x.abs() < 1e-4));
    // jumps refresh the feedback: the LO follows the last post-jump eigenstate
    let mut p = SaidProcess::new(0.7, 1.0, SaidState::after_jump(Sign::Plus, 0.0), &mut rng).record_jumps();
    let mut lo = Sign::Plus;
    for _ in 0..1000 {
        let ev = p.next_jump(&mut rng).unwrap();
        assert_eq!(ev.post_state, ev.channel.post_state(lo));
        if lo == Sign::Plus {
            assert_eq!(ev.post_state == Sign::Minus, ev.channel == Channel::SideMinus);
        }
        lo = ev.post_state;
    }
    assert_eq!(p.jumps().len(), 1000);
}

#[test]
fn said_ensemble_average_follows_the_secular_master_equation() {
    let t = 1.5;
    let n = 10_000u64;
    let xs: Moments = (0..n)
        .map(|i| {
            let mut rng = substream(5, 2, i);
            let rec = run_said_trajectory(0.6, 1.0, SaidState::after_jump(Sign::Plus, 0.0), &[t], i, &mut rng);
            rec.samples[0].state.x
        })
        .collect();
    let me = propagate_to(&BlochState::plus(), Frame::Secular, 0.0, 1.0, 1e-3, t).unwrap();
    let z = (xs.mean - me.x).abs() / xs.std_error();
    assert!(z < 4.0, "{} vs {} ({z:.2} SE)", xs.mean, me.x);
}

#[test]
fn noise_moments_match_the_family() {
    let specs = [
        DiffusiveSpec::general(0.7, Complex64::from_polar(0.3, std::f64::consts::FRAC_PI_3)).unwrap(),
        DiffusiveSpec::x_homodyne(1.0),
        DiffusiveSpec::qsd(),
    ];
    let dt = 1e-2;
    for spec in specs {
        let mut rng = substream(9, 0, 0);
        let n = 1_000_000;
        let (mut abs2, mut re2, mut im2) = (Moments::new(), Moments::new(), Moments::new());
        for _ in 0..n {
            let dz = sample_noise(&spec, dt, &mut rng).unwrap().dz;
            abs2.push(dz.norm_sqr() / dt);
            let sq = dz * dz / dt;
            re2.push(sq.re);
            im2.push(sq.im);
        }
        assert!((abs2.mean - spec.eta).abs() < 5.0 * abs2.std_error(), "{spec:?}");
        assert!((re2.mean - spec.upsilon.re).abs() < 5.0 * re2.std_error().max(1e-15), "{spec:?}");
        assert!((im2.mean - spec.upsilon.im).abs() < 5.0 * im2.std_error().max(1e-15), "{spec:?}");
    }
    let x = sample_noise(&DiffusiveSpec::x_homodyne(1.0), dt, &mut substream(0, 0, 0)).unwrap();
    assert_eq!(x.dz.im, 0.0);
}

#[test]
fn bob_outcomes_follow_born_probabilities() {
    let mut rng = substream(4, 0, 0);
    let s = BlochState::normalized(0.0, 0.6, 0.8);
    let n = 100_000;
    let out = simulate_bob_outcomes(&s, &Axis::ALL, n, &mut rng);
    for (k, want) in [0.0, 0.6, 0.8].into_iter().enumerate() {
        let se = ((1.0 - want * want) / n as f64).sqrt();
        assert!((out[k].mean() - want).abs() < 4.0 * se, "axis {k}");
    }
    let e = simulate_bob_outcomes(&BlochState::plus(), &[Axis::X], 50, &mut rng);
    assert_eq!(e[0].plus, 50);
    assert_eq!(e[1].n, 0);
}

#[test]
fn single_lab_steps_average_to_the_liouvillian() {
    let s = BlochState::normalized(0.3, -0.2, 0.5);
    let dt = 1e-3;
    for spec in [DiffusiveSpec::x_homodyne(0.8), DiffusiveSpec::y_homodyne(1.0), DiffusiveSpec::qsd()] {
        let stepper = LabStepper::new(&spec, 5.0, 1.0).unwrap();
        let mut rng = substream(6, 0, 0);
        let mut m = [Moments::new(), Moments::new(), Moments::new()];
        for _ in 0..100_000 {
            let noise = sample_noise(&spec, dt, &mut rng).unwrap();
            let d = stepper.step(&s, &noise, dt).unwrap() - s;
            m[0].push(d.x);
            m[1].push(d.y);
            m[2].push(d.z);
        }
        let want = exact_liouvillian(&s, 5.0, 1.0) * dt;
        for (k, w) in [want.x, want.y, want.z].into_iter().enumerate() {
            let z = (m[k].mean - w).abs() / m[k].std_error();
            assert!(z < 4.0, "{spec:?} component {k}: {} vs {w} ({z:.2} SE)", m[k].mean);
        }
    }
    let s0 = LabStepper::new(&DiffusiveSpec::x_homodyne(0.0), 5.0, 1.0).unwrap();
    let zero = sample_noise(&DiffusiveSpec::x_homodyne(0.0), dt, &mut substream(0, 0, 0)).unwrap();
    assert_eq!(zero, NoiseIncrement::ZERO);
    let d = s0.step(&s, &zero, dt).unwrap() - s;
    assert!(d.max_abs_diff(&(exact_liouvillian(&s, 5.0, 1.0) * dt)) < 1e-5);
}

#[test]
fn unit_efficiency_homodyne_keeps_purity() {
    // purity deficit after one step shrinks like dt²
    let deficit = |dt: f64| {
        let stepper = LabStepper::new(&DiffusiveSpec::x_homodyne(1.0), 5.0, 1.0).unwrap();
        let mut rng = substream(8, 0, 0);
        let s = BlochState::normalized(0.6, 0.0, 0.8);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let noise = sample_noise(&DiffusiveSpec::x_homodyne(1.0), dt, &mut rng).unwrap();
            let out = stepper.step(&s, &noise, dt).unwrap();
            worst = worst.max(1.0 - out.bloch_norm());
        }
        worst
    };
    let (a, b) = (deficit(1e-3), deficit(5e-4));
    assert!(a < 1e-9 && b < 1e-9, "{a} {b}");
}

#[test]
fn beta_increments_follow_the_beta_sde() {
    let eta = 0.7;
    let dt = 1e-4;
    let n = 1_000_000;
    for beta in [0.2f64, 0.5, 0.8] {
        let s = BlochState::normalized(0.0, beta.sqrt(), 0.0);
        let spec = DiffusiveSpec::secular_y(eta);
        let mut rng = substream(10, 0, 0);
        let mut inc = Moments::new();
        let mut sq = Moments::new();
        for _ in 0..n {
            let noise = sample_noise(&spec, dt, &mut rng).unwrap();
            let d = secular_y_step(&s, eta, 1.0, dt, &noise).unwrap().beta() - beta;
            inc.push(d);
            sq.push(d * d);
        }
        let (a, b) = beta_drift_diffusion(beta, eta).unwrap();
        let z = (inc.mean - a * dt).abs() / inc.std_error();
        assert!(z < 4.0, "beta {beta}: drift {} vs {} ({z:.2} SE)", inc.mean / dt, a);
        let z = (sq.mean - b * dt).abs() / sq.std_error();
        assert!(z < 4.0, "beta {beta}: variance {} vs {} ({z:.2} SE)", sq.mean / dt, b);
    }
    // the β noise is a unit-rate Wiener increment
    let mut rng = substream(12, 0, 0);
    let spec = DiffusiveSpec::secular_y(1.0);
    let m: Moments = (0..200_000)
        .map(|k| beta_noise(sample_noise(&spec, 1.0, &mut rng).unwrap().dv, k as f64 * 0.1).powi(2))
        .collect();
    assert!((m.mean - 1.0).abs() < 5.0 * m.std_error());
}

#[test]
fn secular_y_at_unit_efficiency_purifies() {
    let dt = 1e-4;
    let mut betas: Vec<f64> = (0..20u64)
        .flat_map(|i| {
            let mut rng = substream(13, 0, i);
            let times: Vec<f64> = (0..10).map(|k| 20.0 + k as f64).collect();
            let rec = run_homodyne_trajectory(
                &DiffusiveSpec::secular_y(1.0),
                5.0,
                1.0,
                dt,
                BlochState::MAXIMALLY_MIXED,
                &times,
                i,
                &mut rng,
            )
            .unwrap();
            rec.samples.into_iter().map(|s| s.state.beta())
        })
        .collect();
    betas.sort_by(f64::total_cmp);
    assert!(betas[betas.len() / 2] >= 0.99);
}

#[test]
fn lab_y_purity_grows_with_efficiency() {
    let mut prev = -1.0;
    for k in 1..=5 {
        let eta = 0.2 * k as f64;
        let per: Vec<f64> = (0..16u64)
            .map(|i| {
                let mut rng = substream(14, 0, i);
                let times: Vec<f64> = (0..60).map(|k| 20.0 + k as f64).collect();
                run_homodyne_trajectory(
                    &DiffusiveSpec::y_homodyne(eta),
                    5.0,
                    1.0,
                    1e-3,
                    lab_steady_state(5.0, 1.0),
                    &times,
                    i,
                    &mut rng,
                )
                .unwrap()
                .mean_of(|s| s.beta())
            })
            .collect();
        let v = block_estimate(&per).value;
        assert!(v > prev, "eta {eta}: {v} after {prev}");
        prev = v;
    }
}
