//! Quadrature and closed-form results checked against independent references.

use qjump::beta_oracle::{beta_drift_diffusion, expected_beta, expected_beta_direct, BetaDensity};
use qjump::lindblad::{exact_liouvillian, lab_steady_state, propagate_to, secular_liouvillian, Frame};
use qjump::operator::PauliOp;
use qjump::said::{said_ex2_analytic, said_ex2_jump_weighted, NoJumpFlow};
use qjump::steering::{
    bin_estimate, oracle_critical_said_y, steering_sum, AxisTally, BinSpec, BobModel, ConditionedEnsemble,
    ConditionedRecord, Functional, SteeringOptions,
};
use qjump::BlochState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// 30-digit mpmath values: (eta, time average of x², jump-weighted x², E[beta])
const GOLDEN: [(f64, f64, f64, f64); 5] = [
    (0.2, 0.156372663340248, 0.205578873840314, 0.135320699443482),
    (0.4, 0.32098535516639, 0.386235503427625, 0.281517573141006),
    (0.5, 0.405480049548142, 0.469491044222205, 0.3621616659861),
    (0.6, 0.492612710587838, 0.5513026336665, 0.450393554716697),
    (0.8, 0.687859211979359, 0.726541803966657, 0.663498730507039),
];

const GOLDEN_EXTRA: [(f64, f64, f64); 5] = [
    (0.1, 0.0767427370013592, 0.0669329580511312),
    (0.3, 0.237984916523004, 0.206417679249742),
    (0.7, 0.585014776069716, 0.549202423366102),
    (0.9, 0.812234585702396, 0.802964928371907),
    (0.95, 0.890927585260008, 0.889113492772909),
];

const GOLDEN_CROSSING: f64 = 0.6308755907886419;

#[test]
fn said_average_matches_golden_values() {
    for (eta, ex2, weighted, _) in GOLDEN {
        let v = said_ex2_analytic(eta, 1e-10).unwrap();
        assert!((v - ex2).abs() < 1e-9, "eta {eta}: {v} vs {ex2}");
        let w = said_ex2_jump_weighted(eta, 1e-10).unwrap();
        assert!((w - weighted).abs() < 1e-9, "eta {eta}: {w} vs {weighted}");
    }
    for (eta, ex2, _) in GOLDEN_EXTRA {
        assert!((said_ex2_analytic(eta, 1e-10).unwrap() - ex2).abs() < 1e-9);
    }
}

#[test]
fn expected_beta_matches_golden_values() {
    for (eta, _, _, eb) in GOLDEN {
        let v = expected_beta(eta, 1e-10).unwrap();
        assert!(!v.by_convention);
        assert!((v.value - eb).abs() < 1e-9, "eta {eta}: {} vs {eb}", v.value);
    }
    for (eta, _, eb) in GOLDEN_EXTRA {
        assert!((expected_beta(eta, 1e-10).unwrap().value - eb).abs() < 1e-9);
    }
}

#[test]
fn expected_beta_two_routes_agree() {
    for eta in [0.2, 0.5, 0.7, 0.9] {
        let a = expected_beta(eta, 1e-11).unwrap().value;
        let b = expected_beta_direct(eta, 1e-11).unwrap();
        assert!((a - b).abs() <= 1e-8, "eta {eta}: {a} vs {b}");
    }
    assert!(expected_beta(0.999, 1e-10).unwrap().value > 0.99);
    assert!(expected_beta(1e-3, 1e-10).unwrap().value < 1e-2);
}

#[test]
fn quadrature_is_stable_under_tolerance_halving() {
    for eta in [0.3, 0.6, 0.9] {
        for tol in [1e-6, 1e-8] {
            let a = expected_beta(eta, tol).unwrap().value;
            let b = expected_beta(eta, tol / 2.0).unwrap().value;
            assert!((a - b).abs() < tol);
            let a = said_ex2_analytic(eta, tol).unwrap();
            let b = said_ex2_analytic(eta, tol / 2.0).unwrap();
            assert!((a - b).abs() < tol);
        }
    }
}

#[test]
fn oracle_curves_are_monotone_and_ordered() {
    let mut prev = (0.0, 0.0);
    for k in 1..=20 {
        let eta = k as f64 * 0.05;
        let s = said_ex2_analytic(eta, 1e-10).unwrap();
        let b = expected_beta(eta, 1e-10).unwrap().value;
        assert!(s > prev.0 && b > prev.1, "eta {eta}");
        assert!(b <= s + 1e-10, "eta {eta}: beta {b} above said {s}");
        prev = (s, b);
    }
    assert!((said_ex2_analytic(1.0, 1e-10).unwrap() - 1.0).abs() < 1e-6);
    assert!(said_ex2_analytic(1e-4, 1e-10).unwrap() < 1e-3);
}

#[test]
fn oracle_crossing_matches_golden() {
    let c = oracle_critical_said_y(1e-6).unwrap();
    assert!((c - GOLDEN_CROSSING).abs() < 2e-6, "{c}");
}

/// Simpson rule on `[a, b]` with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn density_matches_generic_stationary_form() {
    // p ∝ exp(2∫A/B)/B, referenced to beta = 1/2
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let eta = rng.random_range(0.2..0.9);
        let beta = rng.random_range(0.05..0.95);
        let d = BetaDensity::new(eta, 1e-12).unwrap();
        let ratio = |b: f64| {
            let phi = simpson(
                |s| {
                    let (a, bb) = beta_drift_diffusion(s, eta).unwrap();
                    a / bb
                },
                0.5,
                b,
                4000,
            );
            let (_, bb) = beta_drift_diffusion(b, eta).unwrap();
            ((2.0 * phi).exp() / bb) / d.pdf(b)
        };
        let r0 = ratio(0.5);
        let r = ratio(beta);
        assert!(((r - r0) / r0).abs() < 1e-6, "eta {eta} beta {beta}: {r} vs {r0}");
    }
}

#[test]
fn density_is_normalized() {
    for eta in [0.3, 0.6, 0.9] {
        let d = BetaDensity::new(eta, 1e-12).unwrap();
        // beta = 1 − (1−t)^4 flattens the endpoint
        let total = simpson(|t| d.pdf(1.0 - (1.0 - t).powi(4)) * 4.0 * (1.0 - t).powi(3), 0.0, 1.0, 20_000);
        assert!((total - 1.0).abs() < 1e-8, "eta {eta}: {total}");
        assert!((d.cdf(0.7) - simpson(|b| d.pdf(b), 0.0, 0.7, 20_000)).abs() < 1e-8);
    }
}

/// `e^{Mτ}` by scaling and squaring a Taylor series.
fn expm2(m: [[f64; 2]; 2], tau: f64) -> [[f64; 2]; 2] {
    let mul = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        c
    };
    let norm = m.iter().flatten().map(|v| v.abs()).sum::<f64>() * tau;
    let k = (norm.max(1.0).log2().ceil() as i32 + 4).max(0);
    let s = tau / 2f64.powi(k);
    let a = [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]];
    let mut e = [[1.0, 0.0], [0.0, 1.0]];
    let mut term = e;
    for n in 1..30 {
        term = mul(term, a);
        term = term.map(|r| r.map(|v| v / n as f64));
        for i in 0..2 {
            for j in 0..2 {
                e[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..k {
        e = mul(e, e);
    }
    e
}

/// No-jump generator in `(w₊, w₋)` coordinates for the `+` local oscillator,
/// assembled from the operator algebra.
fn nojump_matrix(eta: f64) -> [[f64; 2]; 2] {
    let k = 0.5;
    let ops = [
        PauliOp::sigma_minus_plus().scaled(k),
        (PauliOp::sigma_x() + PauliOp::identity()).scaled(k),
        PauliOp::sigma_plus_minus().scaled(k),
    ];
    let gen = |s: &BlochState| {
        let mut d = secular_liouvillian(s, 1.0);
        for c in &ops {
            d = d - c.sandwich(s) * eta;
        }
        d
    };
    let col = |s: BlochState| {
        let d = gen(&s);
        [0.5 * (d.w + d.x), 0.5 * (d.w - d.x)]
    };
    let cp = col(BlochState::plus());
    let cm = col(BlochState::minus());
    [[cp[0], cm[0]], [cp[1], cm[1]]]
}

#[test]
fn closed_form_nojump_flow_matches_matrix_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let eta = rng.random_range(0.0..=1.0);
        let tau = rng.random_range(0.0..30.0);
        let p = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let e = expm2(nojump_matrix(eta), tau);
        let want = [e[0][0] * p[0] + e[0][1] * p[1], e[1][0] * p[0] + e[1][1] * p[1]];
        let got = NoJumpFlow::new(eta, 1.0).evolve(p, tau);
        for i in 0..2 {
            assert!((got[i] - want[i]).abs() < 1e-10 * (1.0 + want[i].abs()), "eta {eta} tau {tau}");
        }
    }
}

#[test]
fn lab_steady_state_is_the_null_vector() {
    for omega in [0.5, 1.0, 5.0, 20.0] {
        // dr/dt = J r + c from the Liouvillian at w = 1; solve J r = −c by Cramer
        let c = exact_liouvillian(&BlochState::normalized(0.0, 0.0, 0.0), omega, 1.0);
        let col = |e: BlochState| {
            let d = exact_liouvillian(&e, omega, 1.0) - c;
            [d.x, d.y, d.z]
        };
        let j = [
            col(BlochState::new(1.0, 1.0, 0.0, 0.0)),
            col(BlochState::new(1.0, 0.0, 1.0, 0.0)),
            col(BlochState::new(1.0, 0.0, 0.0, 1.0)),
        ];
        let det3 = |a: [[f64; 3]; 3]| {
            a[0][0] * (a[1][1] * a[2][2] - a[2][1] * a[1][2]) - a[1][0] * (a[0][1] * a[2][2] - a[2][1] * a[0][2])
                + a[2][0] * (a[0][1] * a[1][2] - a[1][1] * a[0][2])
        };
        let rhs = [-c.x, -c.y, -c.z];
        let d = det3(j);
        let mut r = [0.0; 3];
        for (k, rk) in r.iter_mut().enumerate() {
            let mut m = j;
            m[k] = rhs;
            *rk = det3(m) / d;
        }
        let ss = lab_steady_state(omega, 1.0);
        assert!((ss.x - r[0]).abs() < 1e-12 && (ss.y - r[1]).abs() < 1e-12 && (ss.z - r[2]).abs() < 1e-12);
        let late = propagate_to(&BlochState::excited(), Frame::Lab, omega, 1.0, 1e-3, 50.0).unwrap();
        assert!(late.max_abs_diff(&ss) < 1e-8, "omega {omega}");
    }
}

fn record(trajectory: u64, label: Vec<f64>, state: BlochState, weight: f64) -> ConditionedRecord {
    ConditionedRecord { trajectory, halt_time: 20.0, label, state, bob: [AxisTally { n: 2, plus: 1 }; 3], weight }
}

#[test]
fn steering_sum_on_oracle_exact_ensembles() {
    let eta = 0.6;
    let flow = NoJumpFlow::new(eta, 1.0);
    // one renewal cycle on a fine τ grid, both signs, weighted by survival
    let h = 2e-3;
    let mut said = Vec::new();
    let mut t = 0.5 * h;
    while flow.survival([1.0, 0.0], t) > 1e-16 {
        let q = flow.evolve([1.0, 0.0], t);
        let x = (q[0] - q[1]) / (q[0] + q[1]);
        let w = q[0] + q[1];
        said.push(record(said.len() as u64, vec![x], BlochState::normalized(x, 0.0, 0.0), w));
        said.push(record(said.len() as u64, vec![-x], BlochState::normalized(-x, 0.0, 0.0), w));
        t += h;
    }
    // beta on a fine grid of v = c·u, spread over a ring of angles
    let d = BetaDensity::new(eta, 1e-12).unwrap();
    let mut ybeta = Vec::new();
    let dv = 1e-3;
    let mut v = 0.5 * dv;
    while v < 60.0 {
        let u = v / d.c;
        let beta = u / (1.0 + u);
        let w = (1.0 + u).sqrt() * (-v).exp();
        for k in 0..8 {
            let th = (k as f64 + 0.5) * std::f64::consts::PI / 4.0;
            let (y, z) = (beta.sqrt() * th.cos(), beta.sqrt() * th.sin());
            ybeta.push(record(ybeta.len() as u64, vec![y, z], BlochState::normalized(0.0, y, z), w));
        }
        v += dv;
    }
    let a = ConditionedEnsemble { scheme: "said".into(), eta, omega: 5.0, records: said };
    let b = ConditionedEnsemble { scheme: "y_secular".into(), eta, omega: 5.0, records: ybeta };
    let opts = SteeringOptions {
        bins_a: BinSpec::X { n: 20_000 },
        bins_b: BinSpec::YZ { n: 1000 },
        model: BobModel::Exact,
        bootstrap: 0,
        seed: 0,
    };
    let r = steering_sum(&a, &b, &opts).unwrap();
    let want = said_ex2_analytic(eta, 1e-12).unwrap() + expected_beta(eta, 1e-12).unwrap().value;
    assert!((r.s_value - want).abs() < 1e-4, "{} vs {want}", r.s_value);
    assert_eq!(r.s_value, r.term_f1 + r.term_f2);
    // a single bin sees only the mean state
    let coarse = bin_estimate(&a, Functional::F1, &BinSpec::X { n: 1 }, BobModel::Exact).unwrap();
    assert!(coarse.value < 1e-12);
}
