//! Hidden-state telegraph simulations that compose the physics and detection
//! modules into full experiment records.
//!
//! * Clock experiment: the spectroscopy ion hops between a bright ground
//!   state (`S0`, drives coherent motion) and a dark metastable state (`P0`,
//!   no motion) under periodic interrogation pulses and spontaneous decay.
//!   Each detection sequence is simulated photon by photon and windows of
//!   sequences are demodulated together.
//! * Zeeman experiment: the ground-state sublevel hops by `Delta m = +-1`
//!   through stimulated Raman transitions driven by polarization impurity,
//!   plus rare spontaneous Raman depumping. Each cycle reads out the
//!   red-sideband bright probability of the sublevel's coherent amplitude.

use std::fmt;

use nalgebra::{Matrix6, Vector6};
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::{calibrated_beta_table, coupling_weight, zeeman_detuning, ZeemanDriveConfig, ZeemanLabel};
use crate::error::{Error, Result};
use crate::estimators::{best_threshold, demodulate, ClassifierConfig, Fidelity};
use crate::fluorescence::{simulate_sequence, BinnedCounts, FluorescenceConfig};
use crate::motional::{displaced_thermal, rsb_population, SidebandConfig, Truncation};
use crate::rng::TrialSeed;
use crate::validate::{Checker, Validate, Violation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClockState {
    S0,
    P0,
}

impl ClockState {
    pub fn flipped(self) -> Self {
        match self {
            ClockState::S0 => ClockState::P0,
            ClockState::P0 => ClockState::S0,
        }
    }
}

impl fmt::Display for ClockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClockState::S0 => "S0",
            ClockState::P0 => "P0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventCause {
    DrivePulse,
    SpontaneousDecay,
    RamanJump,
    RamanDepump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent<S> {
    pub time: f64,
    pub from: S,
    pub to: S,
    pub cause: EventCause,
}

/// Time series of hidden state and detection signal, plus the injected
/// transitions that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord<S> {
    /// End time of each recorded point, s.
    pub times: Vec<f64>,
    /// Majority hidden state over each point.
    pub true_state: Vec<S>,
    pub signal: Vec<f64>,
    pub events: Vec<TransitionEvent<S>>,
}

impl<S> TrajectoryRecord<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClockTrajectoryConfig {
    /// Probability that one interrogation pulse transfers S0 <-> P0.
    pub p_drive: f64,
    /// Time between interrogation pulses, s.
    pub pulse_period: f64,
    /// Mean P0 lifetime, s. `None` disables decay. The default of 20 s is a
    /// placeholder, not a measured value.
    pub p0_lifetime: Option<f64>,
    /// Wall time of one detection sequence (cooling, force, detection), s.
    pub sequence_time: f64,
    pub total_time: f64,
    /// Length of one recorded point, s.
    pub averaging_time: f64,
    /// Calibrated coherent amplitude produced in S0.
    pub beta_bright: f64,
    pub initial: ClockState,
    pub fluorescence: FluorescenceConfig,
}

impl Default for ClockTrajectoryConfig {
    fn default() -> Self {
        Self {
            p_drive: 0.25,
            pulse_period: 2.0,
            p0_lifetime: Some(20.0),
            sequence_time: 1.0e-3,
            total_time: 120.0,
            averaging_time: 0.53,
            beta_bright: 1.0,
            initial: ClockState::S0,
            fluorescence: FluorescenceConfig::default(),
        }
    }
}

impl Validate for ClockTrajectoryConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        c.probability(self.p_drive, "p_drive");
        c.check(self.pulse_period > 0.0, "pulse_period", format!("must be > 0, got {}", self.pulse_period));
        if let Some(tau) = self.p0_lifetime {
            c.check(tau > 0.0, "p0_lifetime", format!("must be > 0, got {tau}"));
        }
        c.check(self.sequence_time > 0.0, "sequence_time", format!("must be > 0, got {}", self.sequence_time));
        c.check(
            self.sequence_time >= self.fluorescence.sequence_duration(),
            "sequence_time",
            "must cover the blue and red detection pulses",
        );
        c.check(self.total_time > 0.0, "total_time", format!("must be > 0, got {}", self.total_time));
        c.check(
            self.averaging_time >= self.sequence_time && self.averaging_time <= self.total_time,
            "averaging_time",
            "must lie between sequence_time and total_time",
        );
        c.check(self.beta_bright.is_finite() && self.beta_bright >= 0.0, "beta_bright", "must be >= 0");
        c.nested("fluorescence", self.fluorescence.violations());
        c.out
    }
}

impl ClockTrajectoryConfig {
    pub fn sequences_per_window(&self) -> usize {
        ((self.averaging_time / self.sequence_time).round() as usize).max(1)
    }

    pub fn n_windows(&self) -> usize {
        let n_seq = (self.total_time / self.sequence_time + 1e-9).floor() as usize;
        n_seq / self.sequences_per_window()
    }
}

fn state_at<S: Copy>(initial: S, events: &[TransitionEvent<S>], time: f64) -> S {
    let idx = events.partition_point(|e| e.time <= time);
    if idx == 0 {
        initial
    } else {
        events[idx - 1].to
    }
}

/// Hidden S0/P0 path over `[0, total_time)`.
pub fn clock_hidden_path<R: Rng + ?Sized>(cfg: &ClockTrajectoryConfig, rng: &mut R) -> Vec<TransitionEvent<ClockState>> {
    let decay = cfg.p0_lifetime.map(|tau| Exp::new(1.0 / tau).expect("lifetime is positive"));
    let mut events = Vec::new();
    let mut state = cfg.initial;
    let mut t = 0.0;
    let mut next_pulse = cfg.pulse_period;
    loop {
        if let (ClockState::P0, Some(decay)) = (state, &decay) {
            let at = t + decay.sample(rng);
            if at < next_pulse && at < cfg.total_time {
                events.push(TransitionEvent { time: at, from: state, to: ClockState::S0, cause: EventCause::SpontaneousDecay });
                state = ClockState::S0;
                t = at;
                continue;
            }
        }
        if next_pulse >= cfg.total_time {
            break;
        }
        t = next_pulse;
        next_pulse += cfg.pulse_period;
        if cfg.p_drive > 0.0 && rng.random_bool(cfg.p_drive) {
            let to = state.flipped();
            events.push(TransitionEvent { time: t, from: state, to, cause: EventCause::DrivePulse });
            state = to;
        }
    }
    events
}

/// Clock-state trajectory together with the pooled fluorescence histogram of
/// every recorded window.
pub fn simulate_clock_windows(
    cfg: &ClockTrajectoryConfig,
    seed: TrialSeed,
) -> Result<(TrajectoryRecord<ClockState>, Vec<BinnedCounts>)> {
    cfg.validate()?;
    let events = clock_hidden_path(cfg, &mut seed.rng(0));
    let per_window = cfg.sequences_per_window();
    let fl = &cfg.fluorescence;

    let windows: Vec<(f64, ClockState, f64, BinnedCounts)> = (0..cfg.n_windows())
        .into_par_iter()
        .map(|w| {
            let mut pooled = BinnedCounts::empty(fl.n_bins, fl.phi_m);
            let mut bright = 0usize;
            for s in 0..per_window {
                let index = w * per_window + s;
                let start = index as f64 * cfg.sequence_time;
                let state = state_at(cfg.initial, &events, start);
                let beta = match state {
                    ClockState::S0 => {
                        bright += 1;
                        cfg.beta_bright
                    }
                    ClockState::P0 => 0.0,
                };
                let counts = simulate_sequence(beta, fl, &mut seed.rng(1 + index as u64));
                pooled.accumulate(&counts);
            }
            let majority = if 2 * bright >= per_window { ClockState::S0 } else { ClockState::P0 };
            // an empty window carries no modulation information; report zero
            let signal = demodulate(&pooled, fl.phi_m).unwrap_or(0.0);
            let end = ((w + 1) * per_window) as f64 * cfg.sequence_time;
            (end, majority, signal, pooled)
        })
        .collect();

    let mut record = TrajectoryRecord { times: vec![], true_state: vec![], signal: vec![], events };
    let mut counts = Vec::with_capacity(windows.len());
    for (t, s, sig, c) in windows {
        record.times.push(t);
        record.true_state.push(s);
        record.signal.push(sig);
        counts.push(c);
    }
    Ok((record, counts))
}

pub fn simulate_clock(cfg: &ClockTrajectoryConfig, seed: TrialSeed) -> Result<TrajectoryRecord<ClockState>> {
    simulate_clock_windows(cfg, seed).map(|(r, _)| r)
}

/// Demodulated amplitudes of `n` independent integrations of length
/// `integration_time` with the ion held in `state`. Integration `i` draws
/// sequence `k` from stream `k` of `seed.child(2 i + state)`.
pub fn clock_integrations(
    cfg: &ClockTrajectoryConfig,
    state: ClockState,
    integration_time: f64,
    n: usize,
    seed: TrialSeed,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(integration_time >= cfg.sequence_time) {
        return Err(Error::Domain(format!(
            "integration time {integration_time} is shorter than one sequence"
        )));
    }
    let sequences = (integration_time / cfg.sequence_time).round() as usize;
    let (beta, offset) = match state {
        ClockState::S0 => (cfg.beta_bright, 0),
        ClockState::P0 => (0.0, 1),
    };
    let fl = &cfg.fluorescence;
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| {
            let trial = seed.child(2 * i + offset);
            let mut pooled = BinnedCounts::empty(fl.n_bins, fl.phi_m);
            for k in 0..sequences {
                pooled.accumulate(&simulate_sequence(beta, fl, &mut trial.rng(k as u64)));
            }
            demodulate(&pooled, fl.phi_m).unwrap_or(0.0)
        })
        .collect())
}

/// S0/P0 discrimination at the best single threshold over `n` integrations
/// of each state.
pub fn clock_detection_fidelity(
    cfg: &ClockTrajectoryConfig,
    integration_time: f64,
    n: usize,
    seed: TrialSeed,
) -> Result<Fidelity> {
    let bright = clock_integrations(cfg, ClockState::S0, integration_time, n, seed)?;
    let dark = clock_integrations(cfg, ClockState::P0, integration_time, n, seed)?;
    best_threshold(&bright, &dark)
}

/// Red-sideband readout of the control ion for the Zeeman experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeemanReadout {
    pub sideband: SidebandConfig,
    /// Residual thermal occupation of the mode before the dipole force.
    pub nbar: f64,
    /// Mean detected counts per detection when the qubit is bright.
    pub bright_mean: f64,
    /// Mean detected counts per detection when the qubit is dark.
    pub dark_mean: f64,
}

impl Default for ZeemanReadout {
    fn default() -> Self {
        Self { sideband: SidebandConfig::default(), nbar: 0.15, bright_mean: 12.0, dark_mean: 0.6 }
    }
}

impl Validate for ZeemanReadout {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        c.nested("sideband", self.sideband.violations());
        c.check(self.nbar.is_finite() && self.nbar >= 0.0, "nbar", format!("must be >= 0, got {}", self.nbar));
        c.check(self.bright_mean.is_finite() && self.bright_mean >= 0.0, "bright_mean", "must be >= 0");
        c.check(self.dark_mean.is_finite() && self.dark_mean >= 0.0, "dark_mean", "must be >= 0");
        c.out
    }
}

impl ZeemanReadout {
    /// Expected counts for bright-state probability `p_down`.
    pub fn level(&self, p_down: f64) -> f64 {
        p_down * self.bright_mean + (1.0 - p_down) * self.dark_mean
    }
}

/// Distribution of the sublevel change for a stimulated Raman jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JumpKernel {
    /// Probability of `Delta m = +1`.
    pub up: f64,
    /// Probability of `Delta m = -1`.
    pub down: f64,
}

impl Default for JumpKernel {
    fn default() -> Self {
        Self { up: 0.5, down: 0.5 }
    }
}

impl JumpKernel {
    /// Step taken from `m`. At the edges of the manifold the only available
    /// neighbour is taken, so the jump probability per cycle never depends on `m`.
    pub fn step<R: Rng + ?Sized>(&self, m: ZeemanLabel, rng: &mut R) -> ZeemanLabel {
        match (m.shifted(1), m.shifted(-1)) {
            (Some(up), Some(down)) => {
                if rng.random::<f64>() < self.up {
                    up
                } else {
                    down
                }
            }
            (Some(up), None) => up,
            (None, Some(down)) => down,
            (None, None) => m,
        }
    }

    fn probabilities(&self, m: ZeemanLabel) -> [(i32, f64); 2] {
        match (m.shifted(1), m.shifted(-1)) {
            (Some(_), Some(_)) => [(1, self.up), (-1, self.down)],
            (Some(_), None) => [(1, 1.0), (-1, 0.0)],
            _ => [(1, 0.0), (-1, 1.0)],
        }
    }
}

/// How the nominal cycle time maps onto one detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleAccounting {
    /// `cycle_time` is the duration of one detection cycle.
    PerCycle,
    /// `cycle_time` is the duration of one recorded point of
    /// `detections_per_point` cycles.
    PerPoint,
}

/// Per-cycle spontaneous Raman probabilities, scaled from the `m = 3/2`
/// reference as `C_m^2 / Delta_m^2` (the off-resonant scattering rate).
pub fn scaled_depump(drive: &ZeemanDriveConfig, at_three_halves: f64) -> [f64; 6] {
    let weight = |m: ZeemanLabel| {
        let c = coupling_weight(m);
        let d = zeeman_detuning(m, drive);
        c * c / (d * d)
    };
    let reference = weight(ZeemanLabel::from_twice(3).expect("3/2 is a valid label"));
    let mut out = [0.0; 6];
    for (slot, m) in out.iter_mut().zip(ZeemanLabel::ALL) {
        *slot = at_three_halves * weight(m) / reference;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeemanTrajectoryConfig {
    pub drive: ZeemanDriveConfig,
    /// Calibrated coherent amplitude of the stretched state; the other
    /// sublevels follow from the coupling and detuning ratios.
    pub beta_stretched: f64,
    /// Per-cycle probability of a stimulated Raman jump. Stands in for the
    /// polarization impurity of the dipole-force beams.
    pub p_jump_per_cycle: f64,
    pub jump_kernel: JumpKernel,
    /// Per-cycle spontaneous Raman probability for each sublevel, ordered by
    /// increasing `m`. A depumping event moves to a random neighbour.
    pub p_raman_depump: [f64; 6],
    pub cycle_time: f64,
    pub cycle_accounting: CycleAccounting,
    pub detections_per_point: usize,
    pub total_time: f64,
    /// Starting sublevel; `None` draws one uniformly (no state preparation).
    pub initial: Option<ZeemanLabel>,
    pub readout: ZeemanReadout,
}

impl Default for ZeemanTrajectoryConfig {
    fn default() -> Self {
        let drive = ZeemanDriveConfig::default();
        let p_raman_depump = scaled_depump(&drive, 1.0e-4);
        Self {
            drive,
            beta_stretched: 2.15,
            p_jump_per_cycle: 2.0e-4,
            jump_kernel: JumpKernel::default(),
            p_raman_depump,
            cycle_time: 1.6e-3,
            cycle_accounting: CycleAccounting::PerCycle,
            detections_per_point: 120,
            total_time: 300.0,
            initial: None,
            readout: ZeemanReadout::default(),
        }
    }
}

impl Validate for ZeemanTrajectoryConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        c.nested("drive", self.drive.violations());
        c.check(self.beta_stretched.is_finite() && self.beta_stretched >= 0.0, "beta_stretched", "must be >= 0");
        c.probability(self.p_jump_per_cycle, "p_jump_per_cycle");
        c.probability(self.jump_kernel.up, "jump_kernel.up");
        c.probability(self.jump_kernel.down, "jump_kernel.down");
        c.check(
            (self.jump_kernel.up + self.jump_kernel.down - 1.0).abs() < 1e-12,
            "jump_kernel",
            "probabilities must sum to 1",
        );
        for (i, &p) in self.p_raman_depump.iter().enumerate() {
            c.probability(p, &format!("p_raman_depump[{i}]"));
        }
        c.check(self.cycle_time > 0.0, "cycle_time", format!("must be > 0, got {}", self.cycle_time));
        c.check(self.detections_per_point >= 1, "detections_per_point", "must be >= 1");
        c.check(self.total_time > 0.0, "total_time", format!("must be > 0, got {}", self.total_time));
        c.nested("readout", self.readout.violations());
        c.out
    }
}

impl ZeemanTrajectoryConfig {
    /// Duration of one detection cycle, s.
    pub fn detection_time(&self) -> f64 {
        match self.cycle_accounting {
            CycleAccounting::PerCycle => self.cycle_time,
            CycleAccounting::PerPoint => self.cycle_time / self.detections_per_point as f64,
        }
    }

    pub fn point_time(&self) -> f64 {
        self.detection_time() * self.detections_per_point as f64
    }

    pub fn n_points(&self) -> usize {
        (self.total_time / self.point_time() + 1e-9).floor() as usize
    }

    /// A copy pinned to sublevel `m` with every transition channel closed.
    pub fn pinned(&self, m: ZeemanLabel) -> Self {
        Self { initial: Some(m), p_jump_per_cycle: 0.0, p_raman_depump: [0.0; 6], ..self.clone() }
    }

    /// Per-cycle transition matrix of the hidden chain, rows = from.
    pub fn transition_matrix(&self) -> [[f64; 6]; 6] {
        let mut jump = [[0.0; 6]; 6];
        let mut depump = [[0.0; 6]; 6];
        for m in ZeemanLabel::ALL {
            let i = m.index();
            jump[i][i] += 1.0 - self.p_jump_per_cycle;
            for (delta, p) in self.jump_kernel.probabilities(m) {
                if let Some(to) = m.shifted(delta) {
                    jump[i][to.index()] += self.p_jump_per_cycle * p;
                }
            }
            let neighbours: Vec<_> = [1, -1].iter().filter_map(|&d| m.shifted(d)).collect();
            let pd = self.p_raman_depump[i];
            depump[i][i] += 1.0 - pd;
            for to in &neighbours {
                depump[i][to.index()] += pd / neighbours.len() as f64;
            }
        }
        let mut out = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                out[i][j] = (0..6).map(|k| jump[i][k] * depump[k][j]).sum();
            }
        }
        out
    }

    /// Stationary distribution of the hidden chain. Falls back to uniform
    /// when the chain has no transitions.
    pub fn stationary(&self) -> [f64; 6] {
        let t = self.transition_matrix();
        let mut a = Matrix6::from_fn(|i, j| t[j][i] - if i == j { 1.0 } else { 0.0 });
        for j in 0..6 {
            a[(5, j)] = 1.0;
        }
        let mut rhs = Vector6::zeros();
        rhs[5] = 1.0;
        match a.lu().solve(&rhs) {
            Some(pi) if pi.iter().all(|p| p.is_finite()) => std::array::from_fn(|i| pi[i]),
            _ => [1.0 / 6.0; 6],
        }
    }

    /// Expected number of sublevel changes per second in steady state,
    /// counting both channels.
    pub fn expected_transition_rate(&self) -> f64 {
        let pi = self.stationary();
        let mut per_cycle = 0.0;
        for (i, &p) in pi.iter().enumerate() {
            let m = ZeemanLabel::ALL[i];
            per_cycle += p * self.p_jump_per_cycle;
            // depump applies to the post-jump state
            let mut post = [0.0; 6];
            post[i] += 1.0 - self.p_jump_per_cycle;
            for (delta, q) in self.jump_kernel.probabilities(m) {
                if let Some(to) = m.shifted(delta) {
                    post[to.index()] += self.p_jump_per_cycle * q;
                }
            }
            per_cycle += p * post.iter().zip(&self.p_raman_depump).map(|(a, b)| a * b).sum::<f64>();
        }
        per_cycle / self.detection_time()
    }
}

/// Bright probability after the sideband pulse for each sublevel.
pub fn readout_p_down(cfg: &ZeemanTrajectoryConfig) -> Result<[f64; 6]> {
    let betas = calibrated_beta_table(&cfg.drive, cfg.beta_stretched)?;
    let mut out = [0.0; 6];
    for (slot, beta) in out.iter_mut().zip(betas) {
        let dist = displaced_thermal(beta, cfg.readout.nbar, Truncation::Auto)?;
        *slot = rsb_population(&dist, &cfg.readout.sideband);
    }
    Ok(out)
}

/// Expected mean counts per detection for each sublevel, ordered by increasing `m`.
pub fn predicted_levels(cfg: &ZeemanTrajectoryConfig) -> Result<[f64; 6]> {
    Ok(readout_p_down(cfg)?.map(|p| cfg.readout.level(p)))
}

/// Standard deviation of one recorded point for each pinned sublevel.
pub fn predicted_level_sigma(cfg: &ZeemanTrajectoryConfig) -> Result<[f64; 6]> {
    let (b, d) = (cfg.readout.bright_mean, cfg.readout.dark_mean);
    Ok(readout_p_down(cfg)?.map(|p| {
        let mean = p * b + (1.0 - p) * d;
        let second = p * (b + b * b) + (1.0 - p) * (d + d * d);
        ((second - mean * mean).max(0.0) / cfg.detections_per_point as f64).sqrt()
    }))
}

/// Sublevels grouped into classes that the per-point signal can tell apart,
/// ordered by decreasing level. Adjacent levels are merged when they lie
/// closer than `z` standard deviations from the decision point on each side.
pub fn resolvable_groups(cfg: &ZeemanTrajectoryConfig, z: f64) -> Result<Vec<Vec<ZeemanLabel>>> {
    let levels = predicted_levels(cfg)?;
    let sigma = predicted_level_sigma(cfg)?;
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| levels[b].total_cmp(&levels[a]));
    let mut groups: Vec<Vec<usize>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        let (hi, lo) = (w[0], w[1]);
        if levels[hi] - levels[lo] < z * (sigma[hi] + sigma[lo]) {
            groups.last_mut().expect("non-empty").push(lo);
        } else {
            groups.push(vec![lo]);
        }
    }
    Ok(groups.into_iter().map(|g| g.into_iter().map(|i| ZeemanLabel::ALL[i]).collect()).collect())
}

/// Classifier whose classes are the resolvable groups, with each threshold at
/// the point of equal standardized distance between neighbouring group edges.
/// Class 0 is the lowest group.
pub fn zeeman_classifier(cfg: &ZeemanTrajectoryConfig, z: f64) -> Result<(ClassifierConfig, Vec<Vec<ZeemanLabel>>)> {
    let levels = predicted_levels(cfg)?;
    let sigma = predicted_level_sigma(cfg)?;
    let mut groups = resolvable_groups(cfg, z)?;
    groups.reverse();
    let thresholds = groups
        .windows(2)
        .map(|w| {
            let lower = *w[0].iter().max_by(|a, b| levels[a.index()].total_cmp(&levels[b.index()])).expect("non-empty");
            let upper = *w[1].iter().min_by(|a, b| levels[a.index()].total_cmp(&levels[b.index()])).expect("non-empty");
            let (la, sa) = (levels[lower.index()], sigma[lower.index()]);
            let (lb, sb) = (levels[upper.index()], sigma[upper.index()]);
            (la * sb + lb * sa) / (sa + sb)
        })
        .collect();
    Ok((ClassifierConfig { thresholds, averaging_window: 1 }, groups))
}

fn depump_step<R: Rng + ?Sized>(m: ZeemanLabel, rng: &mut R) -> ZeemanLabel {
    match (m.shifted(1), m.shifted(-1)) {
        (Some(up), Some(down)) => {
            if rng.random_bool(0.5) {
                up
            } else {
                down
            }
        }
        (Some(n), None) | (None, Some(n)) => n,
        (None, None) => m,
    }
}

/// Repeated detection of the ground-state sublevel without state preparation.
///
/// The signal of each recorded point is the mean count over
/// `detections_per_point` consecutive detections.
pub fn simulate_zeeman(cfg: &ZeemanTrajectoryConfig, seed: TrialSeed) -> Result<TrajectoryRecord<ZeemanLabel>> {
    cfg.validate()?;
    let p_down = readout_p_down(cfg)?;
    let mut rng = seed.rng(0);
    let bright = (cfg.readout.bright_mean > 0.0).then(|| Poisson::new(cfg.readout.bright_mean).expect("positive mean"));
    let dark = (cfg.readout.dark_mean > 0.0).then(|| Poisson::new(cfg.readout.dark_mean).expect("positive mean"));
    let dt = cfg.detection_time();

    let mut m = match cfg.initial {
        Some(m) => m,
        None => ZeemanLabel::ALL[rng.random_range(0..6)],
    };
    let mut record = TrajectoryRecord { times: vec![], true_state: vec![], signal: vec![], events: vec![] };
    let mut cycle = 0u64;
    for point in 0..cfg.n_points() {
        let mut occupancy = [0usize; 6];
        let mut total = 0.0;
        for _ in 0..cfg.detections_per_point {
            let t = cycle as f64 * dt;
            if cfg.p_jump_per_cycle > 0.0 && rng.random_bool(cfg.p_jump_per_cycle) {
                let to = cfg.jump_kernel.step(m, &mut rng);
                record.events.push(TransitionEvent { time: t, from: m, to, cause: EventCause::RamanJump });
                m = to;
            }
            let pd = cfg.p_raman_depump[m.index()];
            if pd > 0.0 && rng.random_bool(pd) {
                let to = depump_step(m, &mut rng);
                record.events.push(TransitionEvent { time: t, from: m, to, cause: EventCause::RamanDepump });
                m = to;
            }
            occupancy[m.index()] += 1;
            let is_bright = rng.random_bool(p_down[m.index()]);
            let source = if is_bright { &bright } else { &dark };
            total += source.as_ref().map_or(0.0, |d| d.sample(&mut rng));
            cycle += 1;
        }
        let majority = (0..6).rev().max_by_key(|&i| occupancy[i]).expect("six sublevels");
        record.times.push((point + 1) as f64 * cfg.point_time());
        record.true_state.push(ZeemanLabel::ALL[majority]);
        record.signal.push(total / cfg.detections_per_point as f64);
    }
    Ok(record)
}

/// Independent trajectories on streams `(seed, i)`, in index order.
pub fn zeeman_ensemble(cfg: &ZeemanTrajectoryConfig, seed: u64, n: usize) -> Result<Vec<TrajectoryRecord<ZeemanLabel>>> {
    (0..n as u64).into_par_iter().map(|i| simulate_zeeman(cfg, TrialSeed::new(seed, i))).collect()
}
