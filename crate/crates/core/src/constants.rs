//! Physical constants (CODATA 2018) and unit helpers.

use core::f64::consts::PI;

pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Mass of a ⁸⁷Rb atom in kg.
pub const RB87_MASS: f64 = 86.909_180_520 * ATOMIC_MASS_UNIT;

#[inline]
pub fn joule_to_nk(e: f64) -> f64 {
    e / BOLTZMANN * 1e9
}

#[inline]
pub fn nk_to_joule(t_nk: f64) -> f64 {
    t_nk * 1e-9 * BOLTZMANN
}

#[inline]
pub fn hz_to_rad(f: f64) -> f64 {
    2.0 * PI * f
}
