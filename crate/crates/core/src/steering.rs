//! EPR-steering test between two unravellings.
//!
//! Alice runs detector A (whose conditional states carry `⟨σx⟩`) or detector B
//! (carrying `⟨σy⟩, ⟨σz⟩`), halts at a random time and reports a label. Bob
//! measures the atom, bins his results by Alice's labels and estimates
//! `S = E[⟨σx⟩²]_A + E[⟨σy⟩² + ⟨σz⟩²]_B`. Any objective-state model obeys
//! `S ≤ 1`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beta_oracle::expected_beta;
use crate::homodyne::{run_homodyne_trajectory, DiffusiveSpec};
use crate::lindblad::{default_dt, lab_steady_state, Frame};
use crate::rng::{domain, substream};
use crate::said::{run_said_trajectory, said_ex2_analytic, SaidState, Sign};
use crate::state::BlochState;
use crate::stats::{block_estimate, Estimate, Moments};
use crate::trajectory::TrajectoryRecord;
use crate::{ConfigError, OracleError, SimError, SteeringError};

/// Monitoring scheme that produces a conditioned ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Said,
    YSecular,
    XLab,
    YLab,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Said, Scheme::YSecular, Scheme::XLab, Scheme::YLab];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Said => "said",
            Scheme::YSecular => "y_secular",
            Scheme::XLab => "x_lab",
            Scheme::YLab => "y_lab",
        }
    }

    pub fn frame(self) -> Frame {
        match self {
            Scheme::Said | Scheme::YSecular => Frame::Secular,
            Scheme::XLab | Scheme::YLab => Frame::Lab,
        }
    }

    /// Number of label components Alice reports.
    pub fn label_dim(self) -> usize {
        match self {
            Scheme::Said | Scheme::XLab => 1,
            Scheme::YSecular | Scheme::YLab => 2,
        }
    }

    pub fn label(self, s: &BlochState) -> Vec<f64> {
        match self.label_dim() {
            1 => vec![s.x],
            _ => vec![s.y, s.z],
        }
    }

    fn domain(self) -> u64 {
        match self {
            Scheme::Said => domain::SAID,
            Scheme::YSecular => domain::HOMODYNE ^ 1,
            Scheme::XLab => domain::HOMODYNE ^ 2,
            Scheme::YLab => domain::HOMODYNE ^ 3,
        }
    }

    /// Default binning for this scheme's labels.
    pub fn default_bins(self) -> BinSpec {
        match self.label_dim() {
            1 => BinSpec::X { n: 50 },
            _ => BinSpec::YZ { n: 24 },
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme '{s}' (expected said, y_secular, x_lab or y_lab)"))
    }
}

/// Detector pair `(A, B)`: A supplies the `f1` term, B the `f2` term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pair {
    SaidY,
    #[serde(rename = "x_y")]
    XY,
}

impl Pair {
    pub fn name(self) -> &'static str {
        match self {
            Pair::SaidY => "said_y",
            Pair::XY => "x_y",
        }
    }

    pub fn schemes(self) -> (Scheme, Scheme) {
        match self {
            Pair::SaidY => (Scheme::Said, Scheme::YSecular),
            Pair::XY => (Scheme::XLab, Scheme::YLab),
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "said_y" => Ok(Pair::SaidY),
            "x_y" => Ok(Pair::XY),
            _ => Err(format!("unknown pair '{s}' (expected said_y or x_y)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    fn index(self) -> usize {
        self as usize
    }

    pub fn expectation(self, s: &BlochState) -> f64 {
        [s.x, s.y, s.z][self.index()] / s.w
    }
}

/// ±1 outcomes on one axis, stored as counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisTally {
    pub n: u32,
    pub plus: u32,
}

impl AxisTally {
    pub fn mean(&self) -> f64 {
        (2.0 * self.plus as f64 - self.n as f64) / self.n as f64
    }
}

/// Bob's outcomes for the three axes (indexed x, y, z).
pub type BobOutcomes = [AxisTally; 3];

/// Projective `σ_axis` measurements on independent copies of `state`.
pub fn simulate_bob_outcomes<R: Rng + ?Sized>(state: &BlochState, axes: &[Axis], n_per_axis: u32, rng: &mut R) -> BobOutcomes {
    let mut out = BobOutcomes::default();
    for &axis in axes {
        let p = 0.5 * (1.0 + axis.expectation(state));
        let plus = (0..n_per_axis).filter(|_| rng.random::<f64>() < p).count() as u32;
        out[axis.index()] = AxisTally { n: n_per_axis, plus };
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionedRecord {
    /// Trajectory this record came from (bootstrap cluster).
    pub trajectory: u64,
    pub halt_time: f64,
    pub label: Vec<f64>,
    /// State of the atom at the halt; Bob's outcomes are drawn from it.
    pub state: BlochState,
    pub bob: BobOutcomes,
    /// Statistical weight of the record, 1 for simulated halts. The sampled
    /// Bob model treats weighted tallies as counts, so non-unit weights only
    /// make sense with [`BobModel::Exact`].
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

fn unit_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionedEnsemble {
    pub scheme: String,
    pub eta: f64,
    pub omega: f64,
    pub records: Vec<ConditionedRecord>,
}

impl ConditionedEnsemble {
    pub fn halt_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.halt_time)
    }

    pub fn n_trajectories(&self) -> usize {
        let mut ids: Vec<u64> = self.records.iter().map(|r| r.trajectory).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }

    /// Time-averaged squared label length (`E[x²]` or `E[y² + z²]`) with a
    /// standard error from per-trajectory means.
    pub fn purity(&self) -> Option<Estimate> {
        let mut means: Vec<(u64, Moments)> = Vec::new();
        for r in &self.records {
            let v: f64 = r.label.iter().map(|c| c * c).sum();
            match means.last_mut() {
                Some((id, m)) if *id == r.trajectory => m.push(v),
                _ => {
                    let mut m = Moments::new();
                    m.push(v);
                    means.push((r.trajectory, m));
                }
            }
        }
        if means.is_empty() {
            return None;
        }
        let blocks: Vec<f64> = means.iter().map(|(_, m)| m.mean).collect();
        Some(block_estimate(&blocks))
    }
}

/// Uniform bins on Alice's labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    /// `n` bins on `x ∈ [−1, 1]`.
    X { n: usize },
    /// `n × n` bins on `(y, z) ∈ [−1, 1]²`.
    YZ { n: usize },
}

impl BinSpec {
    pub fn dim(&self) -> usize {
        match self {
            BinSpec::X { .. } => 1,
            BinSpec::YZ { .. } => 2,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            BinSpec::X { n } => n,
            BinSpec::YZ { n } => n * n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index1(v: f64, n: usize) -> usize {
        (((v + 1.0) * 0.5 * n as f64).floor().max(0.0) as usize).min(n - 1)
    }

    pub fn index(&self, label: &[f64]) -> Result<usize, SteeringError> {
        if label.len() != self.dim() {
            return Err(SteeringError::LabelShape { got: label.len(), want: self.dim() });
        }
        Ok(match *self {
            BinSpec::X { n } => Self::index1(label[0], n),
            BinSpec::YZ { n } => Self::index1(label[0], n) * n + Self::index1(label[1], n),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// `⟨σx⟩²`
    F1,
    /// `⟨σy⟩² + ⟨σz⟩²`
    F2,
}

impl Functional {
    pub fn axes(self) -> &'static [Axis] {
        match self {
            Functional::F1 => &[Axis::X],
            Functional::F2 => &[Axis::Y, Axis::Z],
        }
    }
}

/// How Bob's bin means are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobModel {
    /// From the sampled ±1 outcomes, with the `m̂² − v̂/n` bias correction.
    Sampled,
    /// From the exact conditional expectations (infinite outcomes per record).
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinEstimate {
    pub value: f64,
    /// Bins contributing after merging.
    pub groups: usize,
    /// Occupied bins that had to be merged into a neighbour.
    pub merged: usize,
}

/// Per-record data reduced to what the estimator needs.
#[derive(Clone, Debug)]
struct Prepared {
    bin: Vec<usize>,
    cluster: Vec<usize>,
    weight: Vec<f64>,
    n_clusters: usize,
    /// `(n, plus)` per axis of the functional, or exact expectations.
    tally: Vec<[(f64, f64); 2]>,
    exact: Vec<[f64; 2]>,
    n_axes: usize,
    n_bins: usize,
    axis_char: char,
}

impl Prepared {
    fn new(ens: &ConditionedEnsemble, functional: Functional, bins: &BinSpec) -> Result<Self, SteeringError> {
        if ens.records.is_empty() {
            return Err(SteeringError::EmptyEnsemble);
        }
        let axes = functional.axes();
        let mut ids: Vec<u64> = ens.records.iter().map(|r| r.trajectory).collect();
        ids.sort_unstable();
        ids.dedup();
        let mut p = Prepared {
            bin: Vec::with_capacity(ens.records.len()),
            cluster: Vec::with_capacity(ens.records.len()),
            weight: Vec::with_capacity(ens.records.len()),
            n_clusters: ids.len(),
            tally: Vec::with_capacity(ens.records.len()),
            exact: Vec::with_capacity(ens.records.len()),
            n_axes: axes.len(),
            n_bins: bins.len(),
            axis_char: ['x', 'y', 'z'][axes[0].index()],
        };
        for r in &ens.records {
            p.bin.push(bins.index(&r.label)?);
            p.cluster.push(ids.binary_search(&r.trajectory).expect("id present"));
            p.weight.push(r.weight);
            let mut t = [(0.0, 0.0); 2];
            let mut e = [0.0; 2];
            for (k, &a) in axes.iter().enumerate() {
                let tl = r.bob[a.index()];
                t[k] = (tl.n as f64, tl.plus as f64);
                e[k] = a.expectation(&r.state);
            }
            p.tally.push(t);
            p.exact.push(e);
        }
        Ok(p)
    }

    /// Estimate with per-cluster multiplicities (all ones for the plain estimate).
    fn estimate(&self, model: BobModel, weights: Option<&[f64]>) -> Result<BinEstimate, SteeringError> {
        #[derive(Clone, Copy, Default)]
        struct Acc {
            records: f64,
            n: [f64; 2],
            plus: [f64; 2],
            exact: [f64; 2],
        }
        impl Acc {
            fn add(&mut self, o: &Acc) {
                self.records += o.records;
                for k in 0..2 {
                    self.n[k] += o.n[k];
                    self.plus[k] += o.plus[k];
                    self.exact[k] += o.exact[k];
                }
            }
        }
        let mut acc = vec![Acc::default(); self.n_bins];
        for i in 0..self.bin.len() {
            let w = self.weight[i] * weights.map_or(1.0, |w| w[self.cluster[i]]);
            if w == 0.0 {
                continue;
            }
            let a = &mut acc[self.bin[i]];
            a.records += w;
            for k in 0..self.n_axes {
                a.n[k] += w * self.tally[i][k].0;
                a.plus[k] += w * self.tally[i][k].1;
                a.exact[k] += w * self.exact[i][k];
            }
        }
        let na = self.n_axes;
        let ready = |a: &Acc| model == BobModel::Exact || (0..na).all(|k| a.n[k] >= 2.0);
        let term = |a: &Acc| -> f64 {
            (0..na)
                .map(|k| match model {
                    BobModel::Exact => (a.exact[k] / a.records).powi(2),
                    BobModel::Sampled => {
                        let n = a.n[k];
                        let m = (2.0 * a.plus[k] - n) / n;
                        let v = n * (1.0 - m * m) / (n - 1.0);
                        m * m - v / n
                    }
                })
                .sum()
        };
        let mut groups: Vec<Acc> = Vec::new();
        let mut pending = Acc::default();
        let mut pending_bins = 0usize;
        let mut merged = 0usize;
        for a in acc.iter().filter(|a| a.records > 0.0) {
            pending.add(a);
            pending_bins += 1;
            if ready(&pending) {
                merged += pending_bins - 1;
                groups.push(pending);
                pending = Acc::default();
                pending_bins = 0;
            }
        }
        if pending_bins > 0 {
            let last = groups.last_mut().ok_or(SteeringError::InsufficientOutcomes { axis: self.axis_char })?;
            last.add(&pending);
            merged += pending_bins;
        }
        let total: f64 = groups.iter().map(|g| g.records).sum();
        let value = groups.iter().map(|g| g.records * term(g)).sum::<f64>() / total;
        Ok(BinEstimate { value, groups: groups.len(), merged })
    }
}

/// Bob's binned estimate of `E[f]` over Alice's ensemble.
pub fn bin_estimate(
    ensemble: &ConditionedEnsemble,
    functional: Functional,
    bins: &BinSpec,
    model: BobModel,
) -> Result<BinEstimate, SteeringError> {
    Prepared::new(ensemble, functional, bins)?.estimate(model, None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringResult {
    pub s_value: f64,
    pub term_f1: f64,
    pub term_f2: f64,
    /// Bootstrap standard deviation of `S`.
    pub mc_error: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub scheme_a: String,
    pub scheme_b: String,
    pub omega: f64,
    pub merged_bins: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringOptions {
    pub bins_a: BinSpec,
    pub bins_b: BinSpec,
    pub model: BobModel,
    pub bootstrap: usize,
    pub seed: u64,
}

impl SteeringOptions {
    pub fn for_pair(pair: Pair, seed: u64) -> Self {
        let (a, b) = pair.schemes();
        SteeringOptions { bins_a: a.default_bins(), bins_b: b.default_bins(), model: BobModel::Sampled, bootstrap: 200, seed }
    }
}

fn cluster_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for _ in 0..n {
        w[rng.random_range(0..n)] += 1.0;
    }
    w
}

/// `S = E[f1]_A + E[f2]_B` with a trajectory-clustered bootstrap error.
pub fn steering_sum(
    ensemble_a: &ConditionedEnsemble,
    ensemble_b: &ConditionedEnsemble,
    opts: &SteeringOptions,
) -> Result<SteeringResult, SteeringError> {
    let pa = Prepared::new(ensemble_a, Functional::F1, &opts.bins_a)?;
    let pb = Prepared::new(ensemble_b, Functional::F2, &opts.bins_b)?;
    let f1 = pa.estimate(opts.model, None)?;
    let f2 = pb.estimate(opts.model, None)?;
    let boots: Vec<f64> = (0..opts.bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(opts.seed, domain::BOOTSTRAP, b as u64);
            let wa = cluster_weights(pa.n_clusters, &mut rng);
            let wb = cluster_weights(pb.n_clusters, &mut rng);
            Ok(pa.estimate(opts.model, Some(&wa))?.value + pb.estimate(opts.model, Some(&wb))?.value)
        })
        .collect::<Result<_, SteeringError>>()?;
    let m: Moments = boots.iter().copied().collect();
    Ok(SteeringResult {
        s_value: f1.value + f2.value,
        term_f1: f1.value,
        term_f2: f2.value,
        mc_error: m.variance().sqrt(),
        eta_a: ensemble_a.eta,
        eta_b: ensemble_b.eta,
        scheme_a: ensemble_a.scheme.clone(),
        scheme_b: ensemble_b.scheme.clone(),
        omega: ensemble_a.omega,
        merged_bins: f1.merged + f2.merged,
    })
}

/// How halt times are chosen within a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltMode {
    /// First halt uniform on `[halt_min, halt_max]`, then every `stride`.
    Strided,
    /// One halt per trajectory, uniform on `[halt_min, halt_max]`.
    Independent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    pub records_per_traj: usize,
    pub halt_min: f64,
    pub halt_max: f64,
    pub stride: f64,
    pub halt: HaltMode,
    /// Integration step for diffusive schemes; `None` picks the frame default.
    pub dt: Option<f64>,
    pub gamma: f64,
    pub omega: f64,
    pub bob_per_axis: u32,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            n_traj: 64,
            records_per_traj: 200,
            halt_min: 20.0,
            halt_max: 40.0,
            stride: 1.0,
            halt: HaltMode::Strided,
            dt: None,
            gamma: 1.0,
            omega: 5.0,
            bob_per_axis: 2,
            seed: 0,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |name, value, reason| Err(ConfigError::Invalid { name, value, reason });
        if self.n_traj == 0 {
            return bad("n_traj", 0.0, "must be at least 1");
        }
        if self.halt == HaltMode::Strided && self.records_per_traj == 0 {
            return bad("records_per_traj", 0.0, "must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", self.gamma, "must be positive");
        }
        if !(self.halt_min * self.gamma >= 10.0) {
            return bad("halt_min", self.halt_min, "halt times must satisfy T >= 10/gamma");
        }
        if !(self.halt_max >= self.halt_min && self.halt_max.is_finite()) {
            return bad("halt_max", self.halt_max, "must be finite and >= halt_min");
        }
        if !(self.stride > 0.0 && self.stride.is_finite()) {
            return bad("stride", self.stride, "must be positive");
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return bad("omega", self.omega, "must be non-negative");
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("dt", dt, "must be positive");
            }
        }
        if self.bob_per_axis < 2 {
            return bad("bob_per_axis", self.bob_per_axis as f64, "bias correction needs at least 2 outcomes per axis");
        }
        Ok(())
    }

    pub fn dt_for(&self, frame: Frame) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(frame, self.omega))
    }

    pub fn halt_times<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let t0 = self.halt_min + (self.halt_max - self.halt_min) * rng.random::<f64>();
        match self.halt {
            HaltMode::Independent => vec![t0],
            HaltMode::Strided => (0..self.records_per_traj).map(|k| t0 + k as f64 * self.stride).collect(),
        }
    }
}

/// Simulate trajectory `index` of `scheme` at efficiency `eta`, sampled at `times`.
pub fn simulate_trajectory<R: Rng + ?Sized>(
    scheme: Scheme,
    eta: f64,
    cfg: &EnsembleConfig,
    times: &[f64],
    index: u64,
    rng: &mut R,
) -> Result<TrajectoryRecord, SimError> {
    let g = cfg.gamma;
    match scheme {
        Scheme::Said => {
            let sign = if rng.random::<bool>() { Sign::Plus } else { Sign::Minus };
            Ok(run_said_trajectory(eta, g, SaidState::after_jump(sign, 0.0), times, index, rng))
        }
        Scheme::YSecular => run_homodyne_trajectory(
            &DiffusiveSpec::secular_y(eta),
            cfg.omega,
            g,
            cfg.dt_for(Frame::Secular),
            BlochState::MAXIMALLY_MIXED,
            times,
            index,
            rng,
        ),
        Scheme::XLab | Scheme::YLab => {
            let spec = if scheme == Scheme::XLab { DiffusiveSpec::x_homodyne(eta) } else { DiffusiveSpec::y_homodyne(eta) };
            run_homodyne_trajectory(
                &spec,
                cfg.omega,
                g,
                cfg.dt_for(Frame::Lab),
                lab_steady_state(cfg.omega, g),
                times,
                index,
                rng,
            )
        }
    }
}

/// Turn sampled states into records with Bob's outcomes.
pub fn records_from<R: Rng + ?Sized>(
    scheme: Scheme,
    rec: &TrajectoryRecord,
    bob_per_axis: u32,
    bob_rng: &mut R,
) -> Vec<ConditionedRecord> {
    rec.samples
        .iter()
        .map(|s| ConditionedRecord {
            trajectory: rec.stream,
            halt_time: s.t,
            label: scheme.label(&s.state),
            state: s.state,
            bob: simulate_bob_outcomes(&s.state, &Axis::ALL, bob_per_axis, bob_rng),
            weight: 1.0,
        })
        .collect()
}

/// Conditioned ensemble of `cfg.n_traj` trajectories. Trajectory `i` always
/// uses substream `i`, so ensembles at different `eta` share random numbers.
pub fn build_ensemble(scheme: Scheme, eta: f64, cfg: &EnsembleConfig) -> Result<ConditionedEnsemble, SimError> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(ConfigError::Invalid { name: "eta", value: eta, reason: "must lie in [0, 1]" }.into());
    }
    let per: Vec<Vec<ConditionedRecord>> = (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(cfg.seed, scheme.domain(), i);
            let times = cfg.halt_times(&mut rng);
            let rec = simulate_trajectory(scheme, eta, cfg, &times, i, &mut rng)?;
            let mut bob = substream(cfg.seed, domain::BOB ^ scheme.domain(), i);
            Ok(records_from(scheme, &rec, cfg.bob_per_axis, &mut bob))
        })
        .collect::<Result<_, SimError>>()?;
    Ok(ConditionedEnsemble {
        scheme: scheme.name().to_string(),
        eta,
        omega: cfg.omega,
        records: per.into_iter().flatten().collect(),
    })
}

/// Simulated `S(η_A, η_B)` for a detector pair.
pub fn simulate_steering(
    pair: Pair,
    eta_a: f64,
    eta_b: f64,
    cfg: &EnsembleConfig,
    opts: &SteeringOptions,
) -> Result<SteeringResult, SteeringError> {
    let (sa, sb) = pair.schemes();
    let a = build_ensemble(sa, eta_a, cfg)?;
    let b = build_ensemble(sb, eta_b, cfg)?;
    steering_sum(&a, &b, opts)
}

/// `S` for the secular SAID + Y pair from the two quadrature oracles.
pub fn oracle_steering_sum(eta_s: f64, eta_y: f64, tol: f64) -> Result<f64, OracleError> {
    let f1 = if eta_s <= 0.0 { 0.0 } else { said_ex2_analytic(eta_s, tol)? };
    Ok(f1 + expected_beta(eta_y, tol)?.value)
}

/// Diagonal root of `oracle_steering_sum(η, η) = 1` by bisection on `[0.5, 1]`.
pub fn oracle_critical_said_y(tol: f64) -> Result<f64, OracleError> {
    let (mut lo, mut hi) = (0.5, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if oracle_steering_sum(mid, mid, tol * 1e-3)? > 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalOutcome {
    Found,
    /// `S ≤ 1` at η = 1: no violation anywhere on the diagonal.
    NoViolation,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub eta: f64,
    pub s_value: f64,
    pub mc_error: f64,
    pub n_traj: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalResult {
    pub outcome: CriticalOutcome,
    pub eta_critical: Option<f64>,
    pub bracket: (f64, f64),
    pub n_traj_used: usize,
    pub evaluations: Vec<Evaluation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalOptions {
    pub tol: f64,
    /// Largest ensemble size (trajectories per ensemble) the search may use.
    pub budget: usize,
    /// Resolution demanded of `g = S − 1`, in bootstrap standard errors.
    pub z: f64,
    pub ensemble: EnsembleConfig,
    pub steering: SteeringOptions,
}

/// Critical diagonal efficiency of `pair`: bisection on `g(η) = S(η, η) − 1`
/// over `[0.5, 1]`, doubling the ensemble whenever `|g|` is within `z`
/// standard errors of zero.
pub fn critical_eta(pair: Pair, opts: &CriticalOptions) -> Result<CriticalResult, SteeringError> {
    let mut search = Search { pair, opts, n: opts.ensemble.n_traj.max(1), evals: Vec::new() };
    let (mut lo, mut hi) = (0.5, 1.0);
    let mut g_hi = match search.resolve(hi)? {
        None => return Ok(search.finish(CriticalOutcome::Inconclusive, None, (lo, hi))),
        Some(g) if g <= 0.0 => return Ok(search.finish(CriticalOutcome::NoViolation, None, (lo, hi))),
        Some(g) => g,
    };
    let mut g_lo = match search.resolve(lo)? {
        None => return Ok(search.finish(CriticalOutcome::Inconclusive, None, (lo, hi))),
        // violation already at the necessary-condition boundary
        Some(g) if g > 0.0 => return Ok(search.finish(CriticalOutcome::Found, Some(lo), (lo, lo))),
        Some(g) => g,
    };
    while 0.5 * (hi - lo) > opts.tol {
        let mid = 0.5 * (lo + hi);
        match search.resolve(mid)? {
            Some(g) if g > 0.0 => {
                hi = mid;
                g_hi = g;
            }
            Some(g) => {
                lo = mid;
                g_lo = g;
            }
            None => {
                // g(mid) is statistically zero at the largest ensemble: accept
                // mid if the secant slope pins the root to within tol of it
                let err = search.evals.last().map_or(f64::INFINITY, |e| e.mc_error);
                let slope = (g_hi - g_lo) / (hi - lo);
                if slope > 0.0 && opts.z * err / slope <= opts.tol {
                    return Ok(search.finish(CriticalOutcome::Found, Some(mid), (lo, hi)));
                }
                return Ok(search.finish(CriticalOutcome::Inconclusive, None, (lo, hi)));
            }
        }
    }
    Ok(search.finish(CriticalOutcome::Found, Some(0.5 * (lo + hi)), (lo, hi)))
}

struct Search<'a> {
    pair: Pair,
    opts: &'a CriticalOptions,
    n: usize,
    evals: Vec<Evaluation>,
}

impl Search<'_> {
    /// `g(eta)` once it is resolved from zero, growing the ensemble as
    /// needed; `None` when the budget runs out first.
    fn resolve(&mut self, eta: f64) -> Result<Option<f64>, SteeringError> {
        loop {
            let cfg = EnsembleConfig { n_traj: self.n, ..self.opts.ensemble.clone() };
            let r = simulate_steering(self.pair, eta, eta, &cfg, &self.opts.steering)?;
            self.evals.push(Evaluation { eta, s_value: r.s_value, mc_error: r.mc_error, n_traj: self.n });
            let g = r.s_value - 1.0;
            if g.abs() > self.opts.z * r.mc_error {
                return Ok(Some(g));
            }
            if 2 * self.n > self.opts.budget {
                return Ok(None);
            }
            self.n *= 2;
        }
    }

    fn finish(self, outcome: CriticalOutcome, eta: Option<f64>, bracket: (f64, f64)) -> CriticalResult {
        CriticalResult { outcome, eta_critical: eta, bracket, n_traj_used: self.n, evaluations: self.evals }
    }
}
