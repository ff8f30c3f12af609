//! Driven spin-5/2 dynamics of the nuclear Zeeman manifold in the rotating
//! frame.
//!
//! `H / hbar = -Delta_B J_z + Omega_B J_x`, with `Omega_B` the resonant Rabi
//! rate of an equivalent spin-1/2 (full transfer at `Omega_B t = pi`).
//! Amplitudes are ordered by increasing `m`, index 0 is `m = -5/2`.

use nalgebra::{Matrix6, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::NUCLEAR_SPIN_TWICE;
use crate::constants::TWO_PI;
use crate::error::{Error, Result};
use crate::numeric::scan_then_refine;
use crate::rng::TrialSeed;
use crate::trajectory::{readout_p_down, ZeemanTrajectoryConfig};
use crate::validate::{Checker, Validate, Violation};

pub const DIM: usize = NUCLEAR_SPIN_TWICE as usize + 1;
pub const NORM_TOL: f64 = 1e-9;

/// Integrator step as a fraction of the inverse spectral radius.
const STEP_FRACTION: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinState(pub [Complex64; DIM]);

impl SpinState {
    /// `|I, m>` by index (0 is `m = -5/2`).
    pub fn basis(index: usize) -> Self {
        let mut c = [Complex64::new(0.0, 0.0); DIM];
        c[index] = Complex64::new(1.0, 0.0);
        Self(c)
    }

    /// `|5/2, +5/2>`.
    pub fn stretched() -> Self {
        Self::basis(DIM - 1)
    }

    pub fn amplitudes(&self) -> &[Complex64; DIM] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> [f64; DIM] {
        self.0.map(|c| c.norm_sqr())
    }

    /// `<c|H|c>` for a real symmetric `h`.
    pub fn expectation(&self, h: &[[f64; DIM]; DIM]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..DIM {
            for j in 0..DIM {
                acc += self.0[i].conj() * h[i][j] * self.0[j];
            }
        }
        acc.re
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NmrConfig {
    /// Resonant Rabi rate, rad/s.
    pub omega_b_rabi: f64,
    /// Drive detuning, rad/s.
    pub delta_b: f64,
    pub t_max: f64,
    /// Output step; the integrator subdivides it as needed.
    pub dt: f64,
}

impl Default for NmrConfig {
    fn default() -> Self {
        Self { omega_b_rabi: TWO_PI * 1.0e3, delta_b: 0.0, t_max: 3.0e-3, dt: 5.0e-6 }
    }
}

impl NmrConfig {
    pub fn generalized_rabi(&self) -> f64 {
        self.omega_b_rabi.hypot(self.delta_b)
    }

    /// Largest admissible `dt`.
    pub fn max_dt(&self) -> f64 {
        let scale = self.omega_b_rabi.abs().max(self.delta_b.abs()).max(f64::MIN_POSITIVE);
        TWO_PI / (50.0 * scale)
    }

    pub fn times(&self) -> Vec<f64> {
        let n = (self.t_max / self.dt + 1e-9).floor() as usize;
        (0..=n).map(|i| i as f64 * self.dt).collect()
    }
}

impl Validate for NmrConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        c.finite(self.omega_b_rabi, "omega_b_rabi");
        c.finite(self.delta_b, "delta_b");
        c.check(self.t_max.is_finite() && self.t_max >= 0.0, "t_max", format!("must be >= 0, got {}", self.t_max));
        c.check(self.dt > 0.0, "dt", format!("must be > 0, got {}", self.dt));
        if self.dt > 0.0 && self.omega_b_rabi.is_finite() && self.delta_b.is_finite() {
            let bound = self.max_dt();
            c.check(self.dt <= bound, "dt", format!("{} exceeds the step bound {bound:.3e} s", self.dt));
        }
        c.out
    }
}

/// `(J_z, J_x)` for spin 5/2.
pub fn spin_matrices() -> ([[f64; DIM]; DIM], [[f64; DIM]; DIM]) {
    let j = NUCLEAR_SPIN_TWICE as f64 / 2.0;
    let mut jz = [[0.0; DIM]; DIM];
    let mut jx = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        let m = i as f64 - j;
        jz[i][i] = m;
        if i + 1 < DIM {
            let v = 0.5 * (j * (j + 1.0) - m * (m + 1.0)).sqrt();
            jx[i][i + 1] = v;
            jx[i + 1][i] = v;
        }
    }
    (jz, jx)
}

fn real_hamiltonian(cfg: &NmrConfig) -> [[f64; DIM]; DIM] {
    let (jz, jx) = spin_matrices();
    let mut h = [[0.0; DIM]; DIM];
    for i in 0..DIM {
        for j in 0..DIM {
            h[i][j] = -cfg.delta_b * jz[i][j] + cfg.omega_b_rabi * jx[i][j];
        }
    }
    h
}

/// Rotating-frame Hamiltonian over hbar, rad/s.
pub fn rwa_hamiltonian(cfg: &NmrConfig) -> Matrix6<Complex64> {
    let h = real_hamiltonian(cfg);
    Matrix6::from_fn(|i, j| Complex64::new(h[i][j], 0.0))
}

/// Expectation of the rotating-frame Hamiltonian, rad/s.
pub fn energy(state: &SpinState, cfg: &NmrConfig) -> f64 {
    state.expectation(&real_hamiltonian(cfg))
}

fn derivative(h: &[[f64; DIM]; DIM], c: &[Complex64; DIM]) -> [Complex64; DIM] {
    let mut out = [Complex64::new(0.0, 0.0); DIM];
    for i in 0..DIM {
        let mut acc = Complex64::new(0.0, 0.0);
        // tridiagonal
        for j in i.saturating_sub(1)..(i + 2).min(DIM) {
            acc += c[j] * h[i][j];
        }
        out[i] = Complex64::new(acc.im, -acc.re);
    }
    out
}

fn axpy(a: &[Complex64; DIM], s: f64, b: &[Complex64; DIM]) -> [Complex64; DIM] {
    std::array::from_fn(|i| a[i] + b[i] * s)
}

fn check_normalized(state: &SpinState) -> Result<()> {
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NormDrift { norm, tol: NORM_TOL });
    }
    Ok(())
}

/// Integrates `i dc/dt = H c` over `[0, t]` with fixed-step RK4.
///
/// The step is the smaller of `cfg.dt` and `0.005 / rho`, where `rho` bounds
/// the spectral radius of `H`. The state is never renormalized; a final norm
/// outside `1 +- 1e-9` is an error.
pub fn evolve(state: &SpinState, cfg: &NmrConfig, t: f64) -> Result<SpinState> {
    cfg.validate()?;
    check_normalized(state)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Domain(format!("evolution time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(*state);
    }
    let h = real_hamiltonian(cfg);
    let rho = 2.5 * cfg.generalized_rabi();
    let h_max = if rho > 0.0 { (STEP_FRACTION / rho).min(cfg.dt) } else { cfg.dt };
    let steps = (t / h_max).ceil().max(1.0) as usize;
    let dt = t / steps as f64;

    let mut c = state.0;
    for _ in 0..steps {
        let k1 = derivative(&h, &c);
        let k2 = derivative(&h, &axpy(&c, 0.5 * dt, &k1));
        let k3 = derivative(&h, &axpy(&c, 0.5 * dt, &k2));
        let k4 = derivative(&h, &axpy(&c, dt, &k3));
        for i in 0..DIM {
            c[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    let out = SpinState(c);
    check_normalized(&out)?;
    Ok(out)
}

/// `exp(-i H t)` from the spectral decomposition of the real symmetric `H`.
pub fn exact_propagator(cfg: &NmrConfig, t: f64) -> Matrix6<Complex64> {
    let h = real_hamiltonian(cfg);
    let eig = SymmetricEigen::new(Matrix6::from_fn(|i, j| h[i][j]));
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = Matrix6::from_diagonal(&eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * t)));
    v * phases * v.transpose()
}

pub fn evolve_exact(state: &SpinState, cfg: &NmrConfig, t: f64) -> SpinState {
    let u = exact_propagator(cfg, t);
    let c = nalgebra::Vector6::from_column_slice(&state.0);
    let out = u * c;
    SpinState(std::array::from_fn(|i| out[i]))
}

/// Populations after evolving the stretched state for each time.
pub fn population_curve(cfg: &NmrConfig, times: &[f64]) -> Result<Vec<[f64; DIM]>> {
    times
        .par_iter()
        .map(|&t| evolve(&SpinState::stretched(), cfg, t).map(|s| s.populations()))
        .collect()
}

/// Readout of the nuclear sublevel through the sideband detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReadoutMap {
    /// Bright probability per sublevel, ordered by increasing `m`.
    pub p_down: [f64; DIM],
    pub bright_mean: f64,
    pub dark_mean: f64,
    /// Probability per detection that the sublevel is depumped to a
    /// neighbour before it is read out. Zero by default.
    pub depump: f64,
}

impl Default for ReadoutMap {
    fn default() -> Self {
        Self::from_zeeman(&ZeemanTrajectoryConfig::default()).expect("default Zeeman config is valid")
    }
}

impl Validate for ReadoutMap {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        for (i, &p) in self.p_down.iter().enumerate() {
            c.probability(p, &format!("p_down[{i}]"));
        }
        c.check(self.bright_mean.is_finite() && self.bright_mean >= 0.0, "bright_mean", "must be >= 0");
        c.check(self.dark_mean.is_finite() && self.dark_mean >= 0.0, "dark_mean", "must be >= 0");
        c.probability(self.depump, "depump");
        c.out
    }
}

fn neighbours(i: usize) -> impl Iterator<Item = usize> {
    [i.checked_sub(1), (i + 1 < DIM).then_some(i + 1)].into_iter().flatten()
}

impl ReadoutMap {
    pub fn from_zeeman(cfg: &ZeemanTrajectoryConfig) -> Result<Self> {
        Ok(Self {
            p_down: readout_p_down(cfg)?,
            bright_mean: cfg.readout.bright_mean,
            dark_mean: cfg.readout.dark_mean,
            depump: 0.0,
        })
    }

    fn raw_level(&self, i: usize) -> f64 {
        self.p_down[i] * self.bright_mean + (1.0 - self.p_down[i]) * self.dark_mean
    }

    /// Mean counts per detection for each sublevel, depumping included.
    pub fn levels(&self) -> [f64; DIM] {
        std::array::from_fn(|i| {
            let n: Vec<usize> = neighbours(i).collect();
            let moved = n.iter().map(|&k| self.raw_level(k)).sum::<f64>() / n.len() as f64;
            (1.0 - self.depump) * self.raw_level(i) + self.depump * moved
        })
    }

    pub fn signal(&self, populations: &[f64; DIM]) -> f64 {
        populations.iter().zip(self.levels()).map(|(p, l)| p * l).sum()
    }

    fn is_flat(&self) -> bool {
        let l = self.levels();
        let lo = l.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo <= 1e-12 * hi.abs().max(1.0)
    }
}

/// Expected detected counts per cycle after a drive of each duration,
/// starting from the stretched state.
pub fn resonance_curve(cfg: &NmrConfig, times: &[f64], map: &ReadoutMap) -> Result<Vec<f64>> {
    Ok(population_curve(cfg, times)?.iter().map(|p| map.signal(p)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledPoint {
    pub mean: f64,
    /// Standard error of the mean.
    pub err: f64,
}

/// Monte Carlo version of [`resonance_curve`] with `cycles` projective
/// detections per point. Point `i` uses stream `i` of `seed`.
pub fn sample_resonance_curve(
    cfg: &NmrConfig,
    times: &[f64],
    map: &ReadoutMap,
    cycles: usize,
    seed: TrialSeed,
) -> Result<Vec<SampledPoint>> {
    map.validate()?;
    if cycles < 2 {
        return Err(Error::Domain(format!("need at least 2 cycles per point, got {cycles}")));
    }
    let pops = population_curve(cfg, times)?;
    let bright = (map.bright_mean > 0.0).then(|| Poisson::new(map.bright_mean).expect("positive mean"));
    let dark = (map.dark_mean > 0.0).then(|| Poisson::new(map.dark_mean).expect("positive mean"));
    Ok(pops
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = seed.rng(i as u64);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..cycles {
                let mut m = sample_index(p, &mut rng);
                if map.depump > 0.0 && rng.random_bool(map.depump) {
                    let n: Vec<usize> = neighbours(m).collect();
                    m = n[rng.random_range(0..n.len())];
                }
                let source = if rng.random_bool(map.p_down[m]) { &bright } else { &dark };
                let x = source.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                sum += x;
                sum_sq += x * x;
            }
            let n = cycles as f64;
            let mean = sum / n;
            let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
            SampledPoint { mean, err: (var / n).sqrt() }
        })
        .collect())
}

fn sample_index<R: Rng + ?Sized>(p: &[f64; DIM], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * p.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    DIM - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiFit {
    pub omega_b_rabi: f64,
    pub sigma: f64,
    pub chi2: f64,
    pub dof: usize,
}

impl RabiFit {
    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof as f64
    }
}

/// Least-squares resonant Rabi rate from a zero-detuning curve.
///
/// `errors` are per-point standard errors; without them the residuals are
/// weighted equally and `sigma` is scaled by the residual variance. The
/// search covers rates up to the Nyquist limit of the sampling.
pub fn fit_rabi_rate(times: &[f64], observed: &[f64], errors: Option<&[f64]>, map: &ReadoutMap) -> Result<RabiFit> {
    if times.len() != observed.len() || errors.is_some_and(|e| e.len() != times.len()) {
        return Err(Error::Domain("times, observations and errors differ in length".into()));
    }
    if times.len() < 8 {
        return Err(Error::Domain(format!("need at least 8 points, got {}", times.len())));
    }
    if let Some(e) = errors {
        if e.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Domain("errors must be positive".into()));
        }
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let t_min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(t_max > t_min) {
        return Err(Error::NonIdentifiable("all points share one drive duration".into()));
    }
    let lo = observed.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = observed.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-12 * hi.abs().max(1.0) || map.is_flat() {
        return Err(Error::NonIdentifiable("flat data carry no Rabi oscillation".into()));
    }

    let levels = map.levels();
    let weights: Vec<f64> = match errors {
        Some(e) => e.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; times.len()],
    };
    let chi2 = |omega: f64| -> f64 {
        let cfg = NmrConfig { omega_b_rabi: omega, delta_b: 0.0, ..NmrConfig::default() };
        let h = real_hamiltonian(&cfg);
        let eig = SymmetricEigen::new(Matrix6::from_fn(|i, j| h[i][j]));
        times
            .iter()
            .zip(observed)
            .zip(&weights)
            .map(|((&t, &y), &w)| {
                let model = model_signal(&eig, t, &levels);
                w * (y - model).powi(2)
            })
            .sum()
    };

    // the signal depends on omega * t only through the phase, so the grid
    // spacing is a fixed fraction of the inverse span
    let span = t_max;
    let n_pts = times.len() as f64;
    let omega_hi = std::f64::consts::PI * n_pts / span;
    let step = 0.02 * TWO_PI / span;
    let n_grid = (omega_hi / step).ceil() as usize;
    let grid: Vec<f64> = (1..=n_grid).map(|i| i as f64 * step).collect();
    let omega = scan_then_refine(chi2, &grid, 1e-12 * omega_hi);
    let best = chi2(omega);

    let h = 1e-5 * omega;
    let curvature = (chi2(omega + h) - 2.0 * best + chi2(omega - h)) / (h * h);
    let dof = times.len() - 1;
    let scale = if errors.is_some() { 1.0 } else { best / dof as f64 };
    let sigma = if curvature > 0.0 { (2.0 * scale / curvature).sqrt() } else { f64::INFINITY };
    Ok(RabiFit { omega_b_rabi: omega, sigma, chi2: best, dof })
}

fn model_signal(eig: &SymmetricEigen<f64, nalgebra::Const<6>>, t: f64, levels: &[f64; DIM]) -> f64 {
    let v = &eig.eigenvectors;
    let start = DIM - 1;
    let mut s = 0.0;
    for (m, level) in levels.iter().enumerate() {
        let mut amp = Complex64::new(0.0, 0.0);
        for k in 0..DIM {
            amp += Complex64::from_polar(v[(m, k)] * v[(start, k)], -eig.eigenvalues[k] * t);
        }
        s += amp.norm_sqr() * level;
    }
    s
}
