//! Unit conventions and the few physical constants the crate needs.
//!
//! All frequencies and rates inside the library are angular (rad/s).
//! Configuration files and CSV output use MHz (ordinary frequency); the
//! conversion happens once at the boundary.

use std::f64::consts::TAU;

/// Bohr magneton over ħ, in angular frequency per gauss.
///
/// 2π × 1.3996 MHz/G (CODATA value rounded to the precision used
/// throughout).
pub const MU_B_OVER_HBAR: f64 = TAU * 1.3996e6; // rad/s per gauss

/// Convert ordinary frequency in MHz to angular frequency in rad/s.
#[inline]
pub fn mhz(f: f64) -> f64 {
    TAU * f * 1e6
}

/// Convert angular frequency in rad/s back to ordinary frequency in MHz.
#[inline]
pub fn to_mhz(w: f64) -> f64 {
    w / (TAU * 1e6)
}

/// Microns to meters.
#[inline]
pub fn um(x: f64) -> f64 {
    x * 1e-6
}

/// Microseconds to seconds.
#[inline]
pub fn us(t: f64) -> f64 {
    t * 1e-6
}
