//! Harmonic trap as a function of the normalized control `u ∈ [0, 1]`.
//!
//! `u = 0` is the initial trap and `u = 1` the final trap. The default model
//! interpolates the frequencies geometrically and the trap minimum linearly.
//! Anything implementing [`TrapModel`] can replace it.

use crate::constants::hz_to_rad;
use crate::{Error, Result};

/// Slack tolerated on either side of `[0, 1]` before `trap_at` rejects `u`.
pub const CONTROL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapEndpoints {
    /// Initial angular frequencies (x, y, z) in rad/s.
    pub omega_i: [f64; 3],
    /// Final angular frequencies in rad/s.
    pub omega_f: [f64; 3],
    /// Initial trap minimum along z in m.
    pub z0_i: f64,
    /// Final trap minimum along z in m.
    pub z0_f: f64,
}

impl TrapEndpoints {
    pub fn new(omega_i: [f64; 3], omega_f: [f64; 3], z0_i: f64, z0_f: f64) -> Result<Self> {
        let ends = Self::unchecked(omega_i, omega_f, z0_i, z0_f)?;
        if z0_i == z0_f {
            return Err(Error::Config("initial and final trap positions coincide"));
        }
        Ok(ends)
    }

    /// Frequencies in Hz and positions in mm, as they appear in campaign files.
    pub fn from_hz_mm(f_i: [f64; 3], f_f: [f64; 3], z0_i_mm: f64, z0_f_mm: f64) -> Result<Self> {
        Self::new(
            f_i.map(hz_to_rad),
            f_f.map(hz_to_rad),
            z0_i_mm * 1e-3,
            z0_f_mm * 1e-3,
        )
    }

    /// A trap that does not move or change. Only useful as a test fixture and
    /// for stationarity checks, hence exempt from the distinct-position rule.
    pub fn stationary(omega: [f64; 3], z0: f64) -> Result<Self> {
        Self::unchecked(omega, omega, z0, z0)
    }

    /// The atom-chip transport: 2π×[15, 615, 617] Hz at 0.45 mm to
    /// 2π×[10, 33, 31] Hz at 1.65 mm.
    pub fn chip_transport() -> Self {
        Self::from_hz_mm([15.0, 615.0, 617.0], [10.0, 33.0, 31.0], 0.45, 1.65)
            .expect("built-in endpoints are valid")
    }

    fn unchecked(omega_i: [f64; 3], omega_f: [f64; 3], z0_i: f64, z0_f: f64) -> Result<Self> {
        let positive = |w: &[f64; 3]| w.iter().all(|&x| x > 0.0 && x.is_finite());
        if !positive(&omega_i) || !positive(&omega_f) {
            return Err(Error::Config("trap frequencies must be positive and finite"));
        }
        if !z0_i.is_finite() || !z0_f.is_finite() {
            return Err(Error::Config("trap positions must be finite"));
        }
        Ok(Self { omega_i, omega_f, z0_i, z0_f })
    }
}

/// Instantaneous trap seen by the condensate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapState {
    pub omega: [f64; 3],
    pub z0: f64,
    /// dz0/du, turned into the trap velocity through the chain rule.
    pub dz0_du: f64,
}

impl TrapState {
    /// Trap-minimum velocity for a control rate `du_dt`.
    #[inline]
    pub fn velocity(&self, du_dt: f64) -> f64 {
        self.dz0_du * du_dt
    }
}

pub trait TrapModel {
    fn trap_at(&self, u: f64) -> Result<TrapState>;

    fn initial(&self) -> TrapState {
        self.trap_at(0.0).expect("u = 0 is always in range")
    }

    fn terminal(&self) -> TrapState {
        self.trap_at(1.0).expect("u = 1 is always in range")
    }
}

/// Clamp `u` into `[0, 1]`, rejecting anything beyond [`CONTROL_TOLERANCE`].
pub fn check_control(u: f64) -> Result<f64> {
    if !(-CONTROL_TOLERANCE..=1.0 + CONTROL_TOLERANCE).contains(&u) {
        return Err(Error::Domain("control value outside [0, 1]"));
    }
    Ok(u.clamp(0.0, 1.0))
}

/// Geometric frequency and linear position interpolation between endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricTrap {
    ends: TrapEndpoints,
    log_ratio: [f64; 3],
}

impl GeometricTrap {
    pub fn new(ends: TrapEndpoints) -> Self {
        Self {
            ends,
            log_ratio: core::array::from_fn(|k| libm::log(ends.omega_f[k] / ends.omega_i[k])),
        }
    }

    pub fn endpoints(&self) -> &TrapEndpoints {
        &self.ends
    }
}

impl From<TrapEndpoints> for GeometricTrap {
    fn from(ends: TrapEndpoints) -> Self {
        Self::new(ends)
    }
}

impl TrapModel for GeometricTrap {
    fn trap_at(&self, u: f64) -> Result<TrapState> {
        let u = check_control(u)?;
        let e = &self.ends;
        if u == 1.0 {
            return Ok(self.terminal());
        }
        let omega = core::array::from_fn(|k| {
            e.omega_i[k] * libm::exp(u * self.log_ratio[k])
        });
        Ok(TrapState { omega, z0: e.z0_i + u * (e.z0_f - e.z0_i), dz0_du: e.z0_f - e.z0_i })
    }

    fn initial(&self) -> TrapState {
        TrapState { omega: self.ends.omega_i, z0: self.ends.z0_i, dz0_du: self.ends.z0_f - self.ends.z0_i }
    }

    fn terminal(&self) -> TrapState {
        TrapState { omega: self.ends.omega_f, z0: self.ends.z0_f, dz0_du: self.ends.z0_f - self.ends.z0_i }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn model() -> GeometricTrap {
        GeometricTrap::new(TrapEndpoints::chip_transport())
    }

    #[test]
    fn endpoints_are_exact() {
        let m = model();
        let e = m.endpoints();
        let a = m.trap_at(0.0).unwrap();
        let b = m.trap_at(1.0).unwrap();
        assert_eq!(a.omega, e.omega_i);
        assert_eq!(b.omega, e.omega_f);
        assert_eq!(a.z0, e.z0_i);
        assert_eq!(b.z0, e.z0_f);
        assert!((a.omega[2] - 2.0 * PI * 617.0).abs() < 1e-9);
        assert!((b.omega[0] - 2.0 * PI * 10.0).abs() < 1e-12);
        assert!((a.z0 - 0.45e-3).abs() < 1e-15);
        assert!((b.z0 - 1.65e-3).abs() < 1e-15);
    }

    #[test]
    fn midpoint_interpolation() {
        let s = model().trap_at(0.5).unwrap();
        let expect = 2.0 * PI * libm::sqrt(150.0);
        assert!((s.omega[0] - expect).abs() < 1e-10 * expect);
        assert!((s.omega[0] / (2.0 * PI) - 12.247).abs() < 1e-3);
        assert!((s.z0 - 1.05e-3).abs() < 1e-15);
        assert!((s.dz0_du - 1.2e-3).abs() < 1e-15);
    }

    #[test]
    fn control_range() {
        let m = model();
        assert!(m.trap_at(-1e-10).is_ok());
        assert_eq!(m.trap_at(1.0 + 5e-10).unwrap().omega, m.endpoints().omega_f);
        assert!(matches!(m.trap_at(-1e-6), Err(Error::Domain(_))));
        assert!(matches!(m.trap_at(1.01), Err(Error::Domain(_))));
    }

    #[test]
    fn monotone_in_control() {
        let m = model();
        let mut prev = m.trap_at(0.0).unwrap();
        for k in 1..=1000 {
            let s = m.trap_at(k as f64 / 1000.0).unwrap();
            for axis in 0..3 {
                assert!(s.omega[axis] <= prev.omega[axis]);
            }
            assert!(s.z0 >= prev.z0);
            prev = s;
        }
    }

    #[test]
    fn rejects_bad_endpoints() {
        assert!(TrapEndpoints::new([1.0, 1.0, -1.0], [1.0; 3], 0.0, 1.0).is_err());
        assert!(TrapEndpoints::new([1.0; 3], [1.0; 3], 0.5, 0.5).is_err());
        assert!(TrapEndpoints::stationary([1.0; 3], 0.5).is_ok());
    }
}
