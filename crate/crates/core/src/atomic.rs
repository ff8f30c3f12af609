//! Static atomic and laser physics of the spectroscopy ion.
//!
//! The optical dipole force on the spectroscopy ion is state dependent: a
//! sublevel `|I = 5/2, m>` couples to the excited `F = 7/2, m_F = m + 1` level
//! with Clebsch-Gordan weight `C_m` and sees a Zeeman-shifted detuning
//! `Delta_m`. The resulting coherent amplitude of the driven mode is
//!
//! ```text
//! |beta_m| = eta * t_d * (Omega0' * C_m)^2 / |Delta_m|
//! ```
//!
//! valid in the Lamb-Dicke regime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::constants::{angular, BOHR_MAGNETON, HBAR, TWO_PI};
use crate::error::{Error, Result};
use crate::validate::{Checker, Validate, Violation};

/// A half-integer quantum number stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Nuclear spin of the spectroscopy ion's ground state, doubled.
pub const NUCLEAR_SPIN_TWICE: i32 = 5;

/// One of the six Zeeman sublevels `|I = 5/2, m>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ZeemanLabel(HalfInt);

impl ZeemanLabel {
    /// All sublevels in order of increasing `m`.
    pub const ALL: [ZeemanLabel; 6] = [
        ZeemanLabel(HalfInt(-5)),
        ZeemanLabel(HalfInt(-3)),
        ZeemanLabel(HalfInt(-1)),
        ZeemanLabel(HalfInt(1)),
        ZeemanLabel(HalfInt(3)),
        ZeemanLabel(HalfInt(5)),
    ];

    /// The stretched state `m = +5/2`.
    pub const STRETCHED: ZeemanLabel = ZeemanLabel(HalfInt(5));

    pub fn from_twice(twice_m: i32) -> Result<Self> {
        if twice_m.abs() > NUCLEAR_SPIN_TWICE || twice_m.rem_euclid(2) != 1 {
            return Err(Error::Domain(format!(
                "Zeeman label must be a half-odd integer with |m| <= 5/2, got {}",
                HalfInt(twice_m)
            )));
        }
        Ok(ZeemanLabel(HalfInt(twice_m)))
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL
            .get(index)
            .copied()
            .ok_or_else(|| Error::Domain(format!("Zeeman index {index} out of range 0..6")))
    }

    pub fn m(self) -> HalfInt {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.value()
    }

    /// Position in [`ZeemanLabel::ALL`] (0 for `m = -5/2`).
    pub fn index(self) -> usize {
        ((self.0 .0 + NUCLEAR_SPIN_TWICE) / 2) as usize
    }

    /// Number of steps below the stretched state, `5/2 - m`.
    pub fn steps_below_stretched(self) -> u32 {
        ((NUCLEAR_SPIN_TWICE - self.0 .0) / 2) as u32
    }

    /// The sublevel `m + delta`, if it exists.
    pub fn shifted(self, delta: i32) -> Option<Self> {
        Self::from_twice(self.0 .0 + 2 * delta).ok()
    }
}

impl fmt::Display for ZeemanLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 .0 > 0 {
            write!(f, "+{}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl TryFrom<f64> for ZeemanLabel {
    type Error = Error;

    fn try_from(m: f64) -> Result<Self> {
        let twice = 2.0 * m;
        if twice.fract() != 0.0 {
            return Err(Error::Domain(format!("Zeeman label must be a half-integer, got {m}")));
        }
        Self::from_twice(twice as i32)
    }
}

impl From<ZeemanLabel> for f64 {
    fn from(label: ZeemanLabel) -> f64 {
        label.value()
    }
}

/// Atomic and laser parameters of the state-dependent dipole force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZeemanDriveConfig {
    /// Detuning from the stretched-state resonance, rad/s.
    pub delta_r: f64,
    /// Carrier Rabi rate of the stretched transition, rad/s.
    pub omega0_prime: f64,
    /// Dipole-force pulse duration, s.
    pub t_d: f64,
    /// Static magnetic field, T.
    pub b0: f64,
    /// Excited-state g-factor.
    pub g_p1: f64,
    /// Nuclear g-factor of the ground state.
    pub g_i: f64,
    /// Ground-state wavefunction spread of the spectroscopy ion, m.
    pub z0_al: f64,
    /// Wavelength of the dipole-force transition, m.
    pub lambda_p1: f64,
    /// Replaces the Lamb-Dicke parameter computed from `z0_al` and `lambda_p1`.
    pub eta_override: Option<f64>,
    /// Replaces the ground-state Larmor frequency computed from `b0` and `g_i`, rad/s.
    pub larmor_override: Option<f64>,
}

impl Default for ZeemanDriveConfig {
    fn default() -> Self {
        Self {
            delta_r: angular(20.0e6),
            omega0_prime: angular(0.85e6),
            t_d: 50.0e-6,
            b0: 0.74e-3,
            g_p1: 3.0 / 7.0,
            g_i: -0.000_972_48,
            z0_al: 5.86e-9,
            lambda_p1: 267.4e-9,
            eta_override: None,
            larmor_override: None,
        }
    }
}

impl Validate for ZeemanDriveConfig {
    fn violations(&self) -> Vec<Violation> {
        let mut c = Checker::default();
        for (v, k) in [
            (self.delta_r, "delta_r"),
            (self.omega0_prime, "omega0_prime"),
            (self.t_d, "t_d"),
            (self.b0, "b0"),
            (self.g_p1, "g_p1"),
            (self.g_i, "g_i"),
            (self.z0_al, "z0_al"),
            (self.lambda_p1, "lambda_p1"),
        ] {
            c.finite(v, k);
        }
        c.check(self.delta_r != 0.0, "delta_r", "must be nonzero");
        c.check(self.t_d >= 0.0, "t_d", format!("must be >= 0, got {}", self.t_d));
        c.check(self.lambda_p1 > 0.0, "lambda_p1", format!("must be > 0, got {}", self.lambda_p1));
        c.check(self.z0_al > 0.0, "z0_al", format!("must be > 0, got {}", self.z0_al));
        if let Some(eta) = self.eta_override {
            c.check(eta.is_finite() && eta >= 0.0, "eta_override", format!("must be >= 0, got {eta}"));
        }
        if let Some(w) = self.larmor_override {
            c.check(w.is_finite() && w >= 0.0, "larmor_override", format!("must be >= 0, got {w}"));
        }
        c.out
    }
}

impl ZeemanDriveConfig {
    /// Lamb-Dicke parameter, honouring `eta_override`.
    pub fn eta(&self) -> Result<f64> {
        match self.eta_override {
            Some(eta) => Ok(eta),
            None => lamb_dicke(self.z0_al, self.lambda_p1),
        }
    }

    /// Ground-state Zeeman splitting, honouring `larmor_override`.
    pub fn larmor(&self) -> f64 {
        self.larmor_override.unwrap_or_else(|| larmor_frequency(self.b0, self.g_i))
    }

    /// The carrier Rabi rate that places the stretched amplitude at `beta_stretched`.
    pub fn calibrated_omega0_prime(&self, beta_stretched: f64) -> Result<f64> {
        let eta = self.eta()?;
        if eta == 0.0 || self.t_d == 0.0 {
            return Err(Error::NonIdentifiable(
                "carrier Rabi rate cannot be calibrated with eta = 0 or t_d = 0".into(),
            ));
        }
        Ok((beta_stretched * self.delta_r.abs() / (eta * self.t_d)).sqrt())
    }
}

/// `<j, m; 1, 1 | j+1, m+1>`, the coupling of `|j, m>` to the next-higher
/// manifold by a sigma-plus photon.
pub fn clebsch_gordan_stretched(j: HalfInt, m: HalfInt) -> Result<f64> {
    let (tj, tm) = (j.twice(), m.twice());
    if tj < 0 {
        return Err(Error::Domain(format!("j must be >= 0, got {j}")));
    }
    if tm.abs() > tj {
        return Err(Error::Domain(format!("|m| must not exceed j, got j = {j}, m = {m}")));
    }
    if (tj - tm).rem_euclid(2) != 0 {
        return Err(Error::Domain(format!("j = {j} and m = {m} have mismatched parity")));
    }
    // C^2 = (j+m+1)(j+m+2) / ((2j+1)(2j+2)), in doubled integers
    let num = ((tj + tm + 2) as u64) * ((tj + tm + 4) as u64);
    let den = 4 * ((tj + 1) as u64) * ((tj + 2) as u64);
    Ok((num as f64 / den as f64).sqrt())
}

/// Clebsch-Gordan weight `C_m` for the spin-5/2 ground state.
pub fn coupling_weight(m: ZeemanLabel) -> f64 {
    clebsch_gordan_stretched(HalfInt::from_twice(NUCLEAR_SPIN_TWICE), m.m())
        .expect("Zeeman labels are always valid for I = 5/2")
}

/// Detuning seen by sublevel `m`, rad/s: `Delta_R + g_P1 (5/2 - m) mu_B B0 / hbar`.
pub fn zeeman_detuning(m: ZeemanLabel, cfg: &ZeemanDriveConfig) -> f64 {
    let steps = m.steps_below_stretched();
    if steps == 0 {
        return cfg.delta_r;
    }
    cfg.delta_r + cfg.g_p1 * steps as f64 * BOHR_MAGNETON * cfg.b0 / HBAR
}

/// `eta = 2 pi sqrt(2) z0 / lambda`.
pub fn lamb_dicke(z0: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(Error::Domain(format!("wavelength must be > 0, got {wavelength}")));
    }
    Ok(TWO_PI * std::f64::consts::SQRT_2 * z0 / wavelength)
}

/// Larmor angular frequency `|g_I| mu_B B0 / hbar` of the ground-state sublevels.
pub fn larmor_frequency(b0: f64, g_i: f64) -> f64 {
    (g_i * BOHR_MAGNETON * b0).abs() / HBAR
}

/// Coherent amplitude of the driven mode for one sublevel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherentAmplitude {
    pub beta: f64,
    /// Set when `beta * eta >= 1`, i.e. the motion leaves the Lamb-Dicke regime.
    pub lamb_dicke_violated: bool,
}

pub fn coherent_amplitude(m: ZeemanLabel, cfg: &ZeemanDriveConfig) -> Result<CoherentAmplitude> {
    let delta = zeeman_detuning(m, cfg);
    if delta == 0.0 {
        return Err(Error::SingularDetuning(m.to_string()));
    }
    let eta = cfg.eta()?;
    let rabi = cfg.omega0_prime * coupling_weight(m);
    let beta = eta * cfg.t_d * rabi * rabi / delta.abs();
    Ok(CoherentAmplitude { beta, lamb_dicke_violated: beta * eta >= 1.0 })
}

/// Forward amplitudes for all six sublevels, ordered by increasing `m`.
pub fn beta_table(cfg: &ZeemanDriveConfig) -> Result<[CoherentAmplitude; 6]> {
    let mut out = [CoherentAmplitude { beta: 0.0, lamb_dicke_violated: false }; 6];
    for (slot, m) in out.iter_mut().zip(ZeemanLabel::ALL) {
        *slot = coherent_amplitude(m, cfg)?;
    }
    Ok(out)
}

/// Amplitudes rescaled so the stretched state sits at `beta_stretched`.
///
/// Only the ratios `C_m^2 / |Delta_m|` matter, so the result does not depend
/// on `omega0_prime`, `t_d` or `eta`.
pub fn calibrated_beta_table(cfg: &ZeemanDriveConfig, beta_stretched: f64) -> Result<[f64; 6]> {
    let anchor = zeeman_detuning(ZeemanLabel::STRETCHED, cfg).abs();
    let mut out = [0.0; 6];
    for (slot, m) in out.iter_mut().zip(ZeemanLabel::ALL) {
        let delta = zeeman_detuning(m, cfg);
        if delta == 0.0 {
            return Err(Error::SingularDetuning(m.to_string()));
        }
        let w = coupling_weight(m);
        *slot = beta_stretched * w * w * anchor / delta.abs();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::hertz;

    fn label(twice: i32) -> ZeemanLabel {
        ZeemanLabel::from_twice(twice).unwrap()
    }

    #[test]
    fn stretched_coupling_values() {
        let j = HalfInt::from_twice(5);
        assert_eq!(clebsch_gordan_stretched(j, j).unwrap(), 1.0);
        let c = clebsch_gordan_stretched(j, HalfInt::from_twice(3)).unwrap();
        assert!((c - 0.845_154_254_728_516_6).abs() < 1e-15);
        let c = clebsch_gordan_stretched(j, HalfInt::from_twice(-5)).unwrap();
        assert!((c - 0.218_217_890_235_992_4).abs() < 1e-15);
    }

    #[test]
    fn coupling_domain_errors() {
        let j = HalfInt::from_twice(5);
        assert!(clebsch_gordan_stretched(j, HalfInt::from_twice(7)).is_err());
        assert!(clebsch_gordan_stretched(j, HalfInt::from_twice(2)).is_err());
        assert!(clebsch_gordan_stretched(HalfInt::from_twice(-1), HalfInt::from_twice(-1)).is_err());
    }

    #[test]
    fn zeeman_labels() {
        assert!(ZeemanLabel::from_twice(7).is_err());
        assert!(ZeemanLabel::from_twice(2).is_err());
        assert!(ZeemanLabel::try_from(1.5).is_ok());
        assert!(ZeemanLabel::try_from(1.25).is_err());
        assert_eq!(ZeemanLabel::STRETCHED.index(), 5);
        assert_eq!(label(-5).index(), 0);
        assert_eq!(label(-5).to_string(), "-5/2");
        assert_eq!(label(3).to_string(), "+3/2");
        assert_eq!(label(5).shifted(1), None);
        assert_eq!(label(5).shifted(-1), Some(label(3)));
    }

    #[test]
    fn detuning_values() {
        let cfg = ZeemanDriveConfig::default();
        assert_eq!(zeeman_detuning(ZeemanLabel::STRETCHED, &cfg), cfg.delta_r);
        // mu_B B0 / h = 10.357 MHz, times 3/7 = 4.4388 MHz per step
        let d = hertz(zeeman_detuning(label(3), &cfg));
        assert!((d - 24.438_809e6).abs() < 50.0, "{d}");
        let d = hertz(zeeman_detuning(label(-5), &cfg));
        assert!((d - 42.194_046e6).abs() < 100.0, "{d}");
    }

    #[test]
    fn lamb_dicke_values() {
        assert_eq!(lamb_dicke(0.0, 267.4e-9).unwrap(), 0.0);
        let eta = lamb_dicke(5.86e-9, 267.4e-9).unwrap();
        assert!((eta - 0.194_729_2).abs() < 1e-6);
        let lambda = 300e-9;
        let z0 = lambda / (TWO_PI * std::f64::consts::SQRT_2);
        assert!((lamb_dicke(z0, lambda).unwrap() - 1.0).abs() < 1e-15);
        assert!(lamb_dicke(1e-9, 0.0).is_err());
        assert!(lamb_dicke(1e-9, -1.0).is_err());
    }

    #[test]
    fn larmor_values() {
        assert_eq!(larmor_frequency(0.0, -0.000_972_48), 0.0);
        assert_eq!(larmor_frequency(0.74e-3, 0.0), 0.0);
        let f = hertz(larmor_frequency(0.74e-3, -0.000_972_48));
        assert!((f - 10_072.19).abs() < 0.1, "{f}");
        let cfg = ZeemanDriveConfig { larmor_override: Some(angular(8.3e3)), ..Default::default() };
        assert_eq!(cfg.larmor(), angular(8.3e3));
    }

    #[test]
    fn forward_stretched_amplitude() {
        let cfg = ZeemanDriveConfig::default();
        let a = coherent_amplitude(ZeemanLabel::STRETCHED, &cfg).unwrap();
        // forward evaluation overshoots the calibrated 2.15 by about 3 %
        assert!((a.beta - 2.15).abs() < 0.10, "{}", a.beta);
        assert!((a.beta - 2.209_98).abs() < 1e-4, "{}", a.beta);
        assert!(!a.lamb_dicke_violated);
    }

    #[test]
    fn amplitude_vanishes_without_drive() {
        let cfg = ZeemanDriveConfig { omega0_prime: 0.0, ..Default::default() };
        assert_eq!(coherent_amplitude(label(1), &cfg).unwrap().beta, 0.0);
        let cfg = ZeemanDriveConfig { t_d: 0.0, ..Default::default() };
        assert_eq!(coherent_amplitude(label(1), &cfg).unwrap().beta, 0.0);
    }

    #[test]
    fn singular_detuning_is_an_error() {
        let cfg = ZeemanDriveConfig { delta_r: 0.0, ..Default::default() };
        assert!(matches!(
            coherent_amplitude(ZeemanLabel::STRETCHED, &cfg),
            Err(Error::SingularDetuning(_))
        ));
    }

    #[test]
    fn lamb_dicke_warning_flag() {
        let cfg = ZeemanDriveConfig { t_d: 50.0e-3, ..Default::default() };
        let a = coherent_amplitude(ZeemanLabel::STRETCHED, &cfg).unwrap();
        assert!(a.lamb_dicke_violated);
    }

    #[test]
    fn calibrated_table_matches_reported_set() {
        let table = calibrated_beta_table(&ZeemanDriveConfig::default(), 2.15).unwrap();
        let expected = [0.048_53, 0.162_70, 0.368_76, 0.709_07, 1.256_78, 2.15];
        for (b, e) in table.iter().zip(expected) {
            assert!((b - e).abs() < 1e-4, "{b} vs {e}");
        }
    }

    #[test]
    fn calibrated_omega_reproduces_anchor() {
        let cfg = ZeemanDriveConfig::default();
        let omega = cfg.calibrated_omega0_prime(2.15).unwrap();
        let cfg = ZeemanDriveConfig { omega0_prime: omega, ..cfg };
        let b = coherent_amplitude(ZeemanLabel::STRETCHED, &cfg).unwrap().beta;
        assert!((b - 2.15).abs() < 1e-12);
    }

    #[test]
    fn default_config_validates() {
        assert!(ZeemanDriveConfig::default().violations().is_empty());
        let bad = ZeemanDriveConfig { delta_r: 0.0, lambda_p1: -1.0, ..Default::default() };
        let keys: Vec<_> = bad.violations().into_iter().map(|v| v.key).collect();
        assert_eq!(keys, vec!["delta_r", "lambda_p1"]);
    }
}
