//! Physical constants (CODATA 2018), shared by every module.

use std::f64::consts::PI;

/// Bohr magneton, J/T.
pub const BOHR_MAGNETON: f64 = 9.274_010_078e-24;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Planck constant, J s (exact).
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Full turn, for converting between Hz and rad/s.
pub const TWO_PI: f64 = 2.0 * PI;

/// Converts a frequency in Hz to an angular frequency in rad/s.
pub fn angular(hz: f64) -> f64 {
    TWO_PI * hz
}

/// Converts an angular frequency in rad/s to Hz.
pub fn hertz(rad_per_s: f64) -> f64 {
    rad_per_s / TWO_PI
}
