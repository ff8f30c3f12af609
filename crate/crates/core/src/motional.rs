//! Truncated Fock-space description of the probed motional mode and its
//! red-sideband readout.
//!
//! A red-sideband pulse of duration `t` on the control-ion qubit leaves
//!
//! ```text
//! P_down(t) = sum_n p(n) cos^2(Omega_n t)
//! ```
//!
//! in the bright state, with `Omega_n = Omega_1 sqrt(n)` in the Lamb-Dicke
//! limit. Fitting this curve gives the coherent amplitude of the mode.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{laguerre, scan_then_refine};
use crate::validate::{Checker, Validate, Violation};

/// Tail mass (and tail first moment) permitted beyond `n_max`.
pub const TRUNCATION_TOL: f64 = 1e-9;

/// How to pick the truncation order of a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truncation {
    /// Smallest `n_max` whose discarded tail stays below [`TRUNCATION_TOL`].
    Auto,
    Fixed(usize),
}

/// Number-state populations `p(0..=n_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDistribution {
    probs: Vec<f64>,
}

impl FockDistribution {
    /// Wraps explicit populations. They must be non-negative and sum to at most one.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("Fock distribution needs at least one level".into()));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(Error::Domain(format!("negative or NaN population {p}")));
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("populations sum to {total} > 1")));
        }
        Ok(Self { probs })
    }

    /// The number state `|n>`.
    pub fn number_state(n: usize) -> Self {
        let mut probs = vec![0.0; n + 1];
        probs[n] = 1.0;
        Self { probs }
    }

    pub fn vacuum() -> Self {
        Self::number_state(0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    pub fn get(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }
}

/// Terms of a distribution generated until they are negligible, then cut at
/// the requested order.
fn truncate(terms: Vec<f64>, truncation: Truncation) -> FockDistribution {
    let n_max = match truncation {
        Truncation::Fixed(n) => n,
        Truncation::Auto => auto_order(&terms),
    };
    let mut probs = terms;
    probs.resize(n_max + 1, 0.0);
    FockDistribution { probs }
}

/// Smallest `n` with both tail mass and tail first moment beyond `n` below tolerance.
fn auto_order(terms: &[f64]) -> usize {
    let mut mass = 0.0;
    let mut moment = 0.0;
    for n in (0..terms.len()).rev() {
        // tail beyond n-1 = tail beyond n plus term n
        let next_mass = mass + terms[n];
        let next_moment = moment + n as f64 * terms[n];
        if next_mass >= TRUNCATION_TOL || next_moment >= TRUNCATION_TOL {
            return n;
        }
        mass = next_mass;
        moment = next_moment;
    }
    0
}

/// Generates `p(n)` from `p(0)` and the ratio `p(n)/p(n-1)` until the terms
/// underflow past the bulk of the distribution.
fn generate(p0: f64, mean: f64, ratio: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut terms = vec![p0];
    let mut p = p0;
    let mut n = 0usize;
    loop {
        n += 1;
        p *= ratio(n);
        terms.push(p);
        if (n as f64 > mean && p < 1e-40) || p == 0.0 || n > 1_000_000 {
            break;
        }
    }
    terms
}

fn check_amplitude(name: &str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite and >= 0, got {value}")));
    }
    Ok(())
}

/// Poisson populations `e^{-beta^2} beta^{2n} / n!` of the coherent state `|beta>`.
pub fn coherent_distribution(beta: f64, truncation: Truncation) -> Result<FockDistribution> {
    check_amplitude("beta", beta)?;
    let b2 = beta * beta;
    if b2 == 0.0 {
        return Ok(truncate(vec![1.0], truncation));
    }
    Ok(truncate(generate((-b2).exp(), b2, |n| b2 / n as f64), truncation))
}

/// Geometric populations `nbar^n / (1 + nbar)^{n+1}`.
pub fn thermal_distribution(nbar: f64, truncation: Truncation) -> Result<FockDistribution> {
    check_amplitude("nbar", nbar)?;
    if nbar == 0.0 {
        return Ok(truncate(vec![1.0], truncation));
    }
    let q = nbar / (1.0 + nbar);
    Ok(truncate(generate(1.0 / (1.0 + nbar), nbar, |_| q), truncation))
}

/// `exp(G)` for a real matrix by scaling and squaring a Taylor series.
fn expm(generator: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = generator.nrows();
    let norm = generator
        .column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = generator / 2f64.powi(squarings);
    let mut result = DMatrix::<f64>::identity(dim, dim);
    let mut term = DMatrix::<f64>::identity(dim, dim);
    // ||scaled|| <= 1/2, so 20 terms reach double precision
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Displacement operator `D(beta) = exp(beta (a^dag - a))` for real `beta` in a
/// Fock space of dimension `dim`.
pub fn displacement_matrix(beta: f64, dim: usize) -> DMatrix<f64> {
    let mut generator = DMatrix::<f64>::zeros(dim, dim);
    for n in 1..dim {
        let s = beta * (n as f64).sqrt();
        // a^dag |n-1> = sqrt(n) |n>,  a |n> = sqrt(n) |n-1>
        generator[(n, n - 1)] = s;
        generator[(n - 1, n)] = -s;
    }
    expm(&generator)
}

/// Extra Fock levels carried while building `D(beta)` so the diagonal read-out
/// does not see the truncation edge.
pub fn displacement_margin(beta: f64) -> usize {
    4 * (beta * beta).ceil() as usize + 20
}

/// Populations of `D(beta) rho_th(nbar) D(beta)^dag`, computed in a truncated
/// Fock basis.
///
/// With [`Truncation::Fixed`] the order must leave both the thermal input and
/// the displaced output with tails below [`TRUNCATION_TOL`].
pub fn displaced_thermal(beta: f64, nbar: f64, truncation: Truncation) -> Result<FockDistribution> {
    check_amplitude("beta", beta)?;
    check_amplitude("nbar", nbar)?;
    match truncation {
        Truncation::Fixed(n_max) => displaced_thermal_at(beta, nbar, n_max),
        Truncation::Auto => {
            let th = thermal_distribution(nbar, Truncation::Auto)?.n_max();
            let coh = coherent_distribution(beta, Truncation::Auto)?.n_max();
            let mut n_max = th + coh;
            loop {
                match displaced_thermal_at(beta, nbar, n_max) {
                    Err(Error::Truncation { .. }) if n_max < 10_000 => n_max += 8,
                    other => return other,
                }
            }
        }
    }
}

fn displaced_thermal_at(beta: f64, nbar: f64, n_max: usize) -> Result<FockDistribution> {
    let thermal_terms = thermal_distribution(nbar, Truncation::Auto)?;
    let thermal_tail: f64 = thermal_terms.probs().iter().skip(n_max + 1).sum();
    if thermal_tail >= TRUNCATION_TOL {
        return Err(Error::Truncation { n_max, tail: thermal_tail, tol: TRUNCATION_TOL });
    }
    let dim = n_max + 1 + displacement_margin(beta);
    let d = displacement_matrix(beta, dim);
    let mut out = vec![0.0; dim];
    for (k, &pk) in thermal_terms.probs().iter().enumerate().take(n_max + 1) {
        if pk == 0.0 {
            continue;
        }
        for (n, slot) in out.iter_mut().enumerate() {
            let amp = d[(n, k)];
            *slot += pk * amp * amp;
        }
    }
    let tail: f64 = out[n_max + 1..].iter().sum();
    if tail >= TRUNCATION_TOL {
        return Err(Error::Truncation { n_max, tail, tol: TRUNCATION_TOL });
    }
    out.truncate(n_max + 1);
    Ok(FockDistribution { probs: out })
}

/// Red-sideband probe of the control-ion qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SidebandConfig {
    /// Red-sideband Rabi rate for `n = 1`, rad/s, in the `cos^2(Omega_n t)` convention.
    pub omega1: f64,
    /// Pulse duration, s.
    pub t_rsb: f64,
    /// When set, `Omega_n` follows the full Laguerre matrix element at this
    /// Lamb-Dicke parameter instead of the `sqrt(n)` law.
    pub exact_eta: Option<f64>,
}

impl Default for SidebandConfig {
    /// Population flopping of `|n = 1>` at 70 kHz, i.e. `Omega_1 = 2 pi x 35 kHz`
    /// in the `cos^2(Omega_1 t)` convention; 2.8 us pulse.
    fn default() -> Self {
        Self { omega1: crate::constants::angular(35.0e3), t_rsb: 2.8e-6, exact_eta: None }
    }
}

impl Validate for SidebandConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        c.check(self.omega1.is_finite() && self.omega1 >= 0.0, "omega1", format!("must be >= 0, got {}", self.omega1));
        c.check(self.t_rsb.is_finite() && self.t_rsb >= 0.0, "t_rsb", format!("must be >= 0, got {}", self.t_rsb));
        if let Some(eta) = self.exact_eta {
            c.check(eta.is_finite() && eta > 0.0, "exact_eta", format!("must be > 0, got {eta}"));
        }
        c.out
    }
}

impl SidebandConfig {
    /// `Omega_n` for the `|down, n> -> |up, n-1>` transition; zero for `n = 0`.
    pub fn rabi_rate(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.exact_eta {
            None => self.omega1 * (n as f64).sqrt(),
            // <n-1| e^{i eta (a + a^dag)} |n> relative to the n = 1 element
            Some(eta) => self.omega1 * laguerre(n - 1, 1.0, eta * eta) / (n as f64).sqrt(),
        }
    }

    pub fn with_duration(&self, t_rsb: f64) -> Self {
        Self { t_rsb, ..self.clone() }
    }
}

/// Bright-state probability after the red-sideband pulse.
///
/// The sum is normalised by the retained population, so a truncated
/// distribution is read as conditional on its support and `t_rsb = 0` gives
/// exactly one.
pub fn rsb_population(dist: &FockDistribution, cfg: &SidebandConfig) -> f64 {
    let total = dist.total();
    if total == 0.0 {
        return 0.0;
    }
    let p: f64 = dist
        .probs()
        .iter()
        .enumerate()
        .map(|(n, p)| {
            let c = (cfg.rabi_rate(n) * cfg.t_rsb).cos();
            p * (c * c)
        })
        .sum();
    (p / total).clamp(0.0, 1.0)
}

/// [`rsb_population`] at each pulse duration in `times` (the `t_rsb` field of
/// `cfg` is ignored).
pub fn rsb_flopping_curve(dist: &FockDistribution, cfg: &SidebandConfig, times: &[f64]) -> Vec<f64> {
    times.iter().map(|&t| rsb_population(dist, &cfg.with_duration(t))).collect()
}

/// Projective sampling of the flopping curve with `trials` shots per point.
pub fn sample_flopping_curve<R: Rng + ?Sized>(
    dist: &FockDistribution,
    cfg: &SidebandConfig,
    times: &[f64],
    trials: u64,
    rng: &mut R,
) -> Vec<FlopPoint> {
    rsb_flopping_curve(dist, cfg, times)
        .into_iter()
        .zip(times)
        .map(|(p, &t)| {
            let k = Binomial::new(trials, p.clamp(0.0, 1.0)).expect("probability in [0, 1]").sample(rng);
            FlopPoint::observed(t, trials, k)
        })
        .collect()
}

/// One point of a measured flopping curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopPoint {
    pub t_seconds: f64,
    /// Observed bright fraction. Need not equal `successes / trials` for
    /// noiseless synthetic curves.
    pub p_down: f64,
    pub trials: u64,
    pub successes: u64,
}

impl FlopPoint {
    pub fn observed(t_seconds: f64, trials: u64, successes: u64) -> Self {
        Self { t_seconds, p_down: successes as f64 / trials as f64, trials, successes }
    }

    pub fn exact(t_seconds: f64, p_down: f64, trials: u64) -> Self {
        Self { t_seconds, p_down, trials, successes: (p_down * trials as f64).round() as u64 }
    }
}

/// Maximum-likelihood coherent amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentFit {
    pub beta: f64,
    /// Standard error from the curvature of the log-likelihood.
    pub sigma: f64,
    /// 68 % interval `beta +- sigma`, clipped at zero.
    pub interval: (f64, f64),
    pub log_likelihood: f64,
}

/// Upper end of the amplitude search.
pub const FIT_BETA_MAX: f64 = 6.0;

fn binomial_log_likelihood(points: &[FlopPoint], beta: f64, cfg: &SidebandConfig) -> f64 {
    let dist = coherent_distribution(beta.abs(), Truncation::Auto).expect("beta is finite");
    points
        .iter()
        .map(|pt| {
            let p = rsb_population(&dist, &cfg.with_duration(pt.t_seconds)).clamp(0.0, 1.0);
            let n = pt.trials as f64;
            let k = pt.p_down * n;
            let mut ll = 0.0;
            if k > 0.0 {
                ll += k * p.max(1e-300).ln();
            }
            if n - k > 0.0 {
                ll += (n - k) * (1.0 - p).max(1e-300).ln();
            }
            ll
        })
        .sum()
}

/// Fits the coherent amplitude to a red-sideband flopping curve by binomial
/// maximum likelihood. `cfg` supplies the sideband coupling.
pub fn fit_coherent_beta(points: &[FlopPoint], cfg: &SidebandConfig) -> Result<CoherentFit> {
    if points.len() < 5 {
        return Err(Error::Domain(format!("need at least 5 curve points, got {}", points.len())));
    }
    for pt in points {
        if pt.trials == 0 {
            return Err(Error::Domain(format!("point at t = {} has zero trials", pt.t_seconds)));
        }
        if !(0.0..=1.0).contains(&pt.p_down) || !pt.t_seconds.is_finite() || pt.t_seconds < 0.0 {
            return Err(Error::Domain(format!("invalid curve point {pt:?}")));
        }
    }
    let t0 = points[0].t_seconds;
    if points.iter().all(|pt| pt.t_seconds == t0) {
        return Err(Error::NonIdentifiable("all curve points share one pulse duration".into()));
    }
    let p0 = points[0].p_down;
    if p0 < 1.0 && points.iter().all(|pt| pt.p_down == p0) {
        return Err(Error::NonIdentifiable("flat curve carries no flopping signal".into()));
    }

    let nll = |b: f64| -binomial_log_likelihood(points, b, cfg);
    let grid: Vec<f64> = (0..=480).map(|i| FIT_BETA_MAX * i as f64 / 480.0).collect();
    let beta = scan_then_refine(nll, &grid, 1e-11).max(0.0);
    let ll = binomial_log_likelihood(points, beta, cfg);

    // the likelihood is even in beta, so the central difference is valid at 0
    let h = 1e-4 * beta.max(1.0);
    let curvature = (binomial_log_likelihood(points, beta + h, cfg) - 2.0 * ll
        + binomial_log_likelihood(points, beta - h, cfg))
        / (h * h);
    let sigma = if curvature < 0.0 { (-1.0 / curvature).sqrt() } else { f64::INFINITY };
    Ok(CoherentFit {
        beta,
        sigma,
        interval: ((beta - sigma).max(0.0), beta + sigma),
        log_likelihood: ll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::angular;

    #[test]
    fn vacuum_coherent_state() {
        let d = coherent_distribution(0.0, Truncation::Auto).unwrap();
        assert_eq!(d.probs(), &[1.0]);
        let d = coherent_distribution(0.0, Truncation::Fixed(4)).unwrap();
        assert_eq!(d.probs(), &[1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn unit_coherent_state() {
        let d = coherent_distribution(1.0, Truncation::Auto).unwrap();
        let e = (-1.0f64).exp();
        assert!((d.get(0) - e).abs() < 1e-15);
        assert!((d.get(1) - e).abs() < 1e-15);
        assert!((d.get(2) - e / 2.0).abs() < 1e-15);
        assert!((d.get(0) - 0.367_88).abs() < 1e-5);
        assert!((d.get(2) - 0.183_94).abs() < 1e-5);
    }

    #[test]
    fn coherent_mean_and_tail() {
        for beta in [0.05, 0.5, 1.0, 2.15, 4.0] {
            let d = coherent_distribution(beta, Truncation::Auto).unwrap();
            assert!((d.mean() - beta * beta).abs() < 1e-9, "beta {beta}");
            assert!(1.0 - d.total() < TRUNCATION_TOL);
            // smallest such order
            let shorter = coherent_distribution(beta, Truncation::Fixed(d.n_max() - 1)).unwrap();
            assert!(1.0 - shorter.total() >= TRUNCATION_TOL || (beta * beta - shorter.mean()) >= TRUNCATION_TOL);
        }
    }

    #[test]
    fn thermal_values() {
        assert_eq!(thermal_distribution(0.0, Truncation::Auto).unwrap().probs(), &[1.0]);
        let d = thermal_distribution(0.15, Truncation::Auto).unwrap();
        assert!((d.get(0) - 1.0 / 1.15).abs() < 1e-15);
        assert!((d.get(0) - 0.869_57).abs() < 1e-5);
        for nbar in [0.15, 1.0, 3.0] {
            let d = thermal_distribution(nbar, Truncation::Auto).unwrap();
            assert!((d.mean() - nbar).abs() < 1e-9);
        }
    }

    #[test]
    fn negative_inputs_rejected() {
        assert!(coherent_distribution(-0.1, Truncation::Auto).is_err());
        assert!(thermal_distribution(-0.1, Truncation::Auto).is_err());
        assert!(displaced_thermal(1.0, -0.1, Truncation::Auto).is_err());
    }

    #[test]
    fn displacement_is_orthogonal_away_from_edge() {
        let d = displacement_matrix(1.3, 60);
        let dtd = d.transpose() * &d;
        for i in 0..20 {
            for j in 0..20 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((dtd[(i, j)] - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn displaced_vacuum_is_coherent() {
        let beta = 1.7;
        let dt = displaced_thermal(beta, 0.0, Truncation::Auto).unwrap();
        let coh = coherent_distribution(beta, Truncation::Fixed(dt.n_max())).unwrap();
        for (a, b) in dt.probs().iter().zip(coh.probs()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_displacement_is_thermal() {
        let dt = displaced_thermal(0.0, 0.4, Truncation::Auto).unwrap();
        let th = thermal_distribution(0.4, Truncation::Fixed(dt.n_max())).unwrap();
        for (a, b) in dt.probs().iter().zip(th.probs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn displaced_thermal_mean() {
        let d = displaced_thermal(1.0, 0.15, Truncation::Auto).unwrap();
        assert!((d.mean() - 1.15).abs() < 1e-6);
    }

    #[test]
    fn fixed_truncation_too_small_is_error() {
        assert!(matches!(
            displaced_thermal(2.0, 0.15, Truncation::Fixed(5)),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn rsb_edge_cases() {
        let cfg = SidebandConfig { omega1: angular(70e3), t_rsb: 0.0, exact_eta: None };
        let coh = coherent_distribution(2.15, Truncation::Auto).unwrap();
        assert_eq!(rsb_population(&coh, &cfg), 1.0);
        let one = FockDistribution::number_state(1);
        let t = std::f64::consts::FRAC_PI_2 / cfg.omega1;
        assert!(rsb_population(&one, &cfg.with_duration(t)) < 1e-30);
    }

    #[test]
    fn rsb_small_amplitude_readout() {
        let cfg = SidebandConfig { omega1: angular(0.07e6), t_rsb: 2.8e-6, exact_eta: None };
        let coh = coherent_distribution(0.05, Truncation::Auto).unwrap();
        // direct 50-term summation gives 0.99777944
        assert!((rsb_population(&coh, &cfg) - 0.997_779_443_889).abs() < 1e-10);
    }

    #[test]
    fn flopping_curve_for_number_states() {
        let cfg = SidebandConfig { omega1: angular(50e3), ..Default::default() };
        let w = cfg.omega1;
        let times = [0.0, std::f64::consts::FRAC_PI_2 / w, std::f64::consts::PI / w];
        let c = rsb_flopping_curve(&FockDistribution::number_state(1), &cfg, &times);
        assert!((c[0] - 1.0).abs() < 1e-15 && c[1] < 1e-25 && (c[2] - 1.0).abs() < 1e-15);
        let vac = rsb_flopping_curve(&FockDistribution::vacuum(), &cfg, &[0.0, 1e-6, 1e-3]);
        assert!(vac.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn laguerre_law_reduces_to_sqrt_at_small_eta() {
        let base = SidebandConfig::default();
        let exact = SidebandConfig { exact_eta: Some(1e-5), ..base.clone() };
        for n in 1..10 {
            let r = exact.rabi_rate(n) / base.rabi_rate(n);
            assert!((r - 1.0).abs() < 1e-8);
        }
        assert_eq!(exact.rabi_rate(1), base.omega1);
    }

    fn synthetic(beta: f64, cfg: &SidebandConfig) -> Vec<FlopPoint> {
        let dist = coherent_distribution(beta, Truncation::Auto).unwrap();
        (0..20)
            .map(|i| {
                let t = i as f64 * 1.5e-6;
                FlopPoint::exact(t, rsb_population(&dist, &cfg.with_duration(t)), 300)
            })
            .collect()
    }

    #[test]
    fn fit_recovers_noiseless_amplitude() {
        let cfg = SidebandConfig::default();
        for beta in [0.1, 0.5, 1.0, 2.0, 2.15] {
            let fit = fit_coherent_beta(&synthetic(beta, &cfg), &cfg).unwrap();
            assert!((fit.beta - beta).abs() < 1e-6, "{beta}: {fit:?}");
            assert!(fit.sigma.is_finite() && fit.sigma > 0.0);
        }
    }

    #[test]
    fn fit_of_vacuum_curve_is_zero() {
        let cfg = SidebandConfig::default();
        let fit = fit_coherent_beta(&synthetic(0.0, &cfg), &cfg).unwrap();
        assert!(fit.beta < 1e-6, "{fit:?}");
        assert_eq!(fit.interval.0, 0.0);
    }

    #[test]
    fn fit_rejects_degenerate_curves() {
        let cfg = SidebandConfig::default();
        let flat: Vec<_> = (0..6).map(|i| FlopPoint::exact(i as f64 * 1e-6, 0.5, 100)).collect();
        assert!(matches!(fit_coherent_beta(&flat, &cfg), Err(Error::NonIdentifiable(_))));
        let same_t: Vec<_> = (0..6).map(|i| FlopPoint::exact(1e-6, 0.1 * i as f64, 100)).collect();
        assert!(matches!(fit_coherent_beta(&same_t, &cfg), Err(Error::NonIdentifiable(_))));
        assert!(fit_coherent_beta(&flat[..4], &cfg).is_err());
        let mut zero = flat.clone();
        zero[2].trials = 0;
        assert!(fit_coherent_beta(&zero, &cfg).is_err());
    }
}
