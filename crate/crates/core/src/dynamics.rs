//! Centre-of-mass and Thomas-Fermi scaling dynamics of the condensate, its
//! classical and quantum energies, and the transport objective.
//!
//! The centre of mass obeys `z̈_A = −ω_z²(t)(z_A − z0(t))`. The radii are
//! `r_i(t) = λ_i(t) r_i(0)` with
//! `λ̈_i = ω_i²(0) / (λ_i λ_x λ_y λ_z) − ω_i²(t) λ_i`, starting from `λ = 1`.
//! The two systems are independent.

use core::f64::consts::PI;

use crate::constants::{BOHR_RADIUS, HBAR, RB87_MASS};
use crate::ramp::Spline;
use crate::trap::{TrapModel, TrapState};
use crate::{Error, Result};

/// Default number of RK4 steps per transport.
pub const DEFAULT_STEPS: usize = 4000;
/// Smallest step count accepted by [`integrate`].
pub const MIN_STEPS: usize = 1000;
/// Number of end-state properties learned by the surrogate.
pub const PROPERTY_COUNT: usize = 9;
/// Sampled radii are clipped below at this fraction of the final TF radius.
pub const RADIUS_FLOOR_FRACTION: f64 = 1e-2;

/// `z_A, ż_A, r_x, ṙ_x, r_y, ṙ_y, r_z, ṙ_z` at `t_f`, then `E_cl^int`.
pub type Properties = [f64; PROPERTY_COUNT];

pub const PROPERTY_NAMES: [&str; PROPERTY_COUNT] =
    ["z_A", "dz_A", "r_x", "dr_x", "r_y", "dr_y", "r_z", "dr_z", "E_cl_int"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BecParams {
    /// Atomic mass in kg.
    pub mass: f64,
    /// s-wave scattering length in m.
    pub scattering_length: f64,
    pub atom_number: f64,
}

impl BecParams {
    pub fn new(mass: f64, scattering_length: f64, atom_number: f64) -> Result<Self> {
        if !(mass > 0.0 && scattering_length > 0.0 && atom_number > 0.0)
            || !(mass.is_finite() && scattering_length.is_finite() && atom_number.is_finite())
        {
            return Err(Error::Config("mass, scattering length and atom number must be positive"));
        }
        Ok(Self { mass, scattering_length, atom_number })
    }

    /// ⁸⁷Rb with the scattering length given in Bohr radii.
    pub fn rb87(a_s_bohr: f64, atom_number: f64) -> Result<Self> {
        Self::new(RB87_MASS, a_s_bohr * BOHR_RADIUS, atom_number)
    }

    /// `g = 4πħ² a_s / m`.
    pub fn coupling(&self) -> f64 {
        4.0 * PI * HBAR * HBAR * self.scattering_length / self.mass
    }
}

/// Objective weights `[λ_cl, λ_qu, λ_cl^int]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub cl: f64,
    pub qu: f64,
    pub cl_int: f64,
}

impl Weights {
    pub fn new(cl: f64, qu: f64, cl_int: f64) -> Result<Self> {
        if [cl, qu, cl_int].iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Config("objective weights must be non-negative"));
        }
        Ok(Self { cl, qu, cl_int })
    }

    pub fn balanced() -> Self {
        Self { cl: 1.0, qu: 3.3, cl_int: 5.5e-4 }
    }

    pub fn quantum() -> Self {
        Self { cl: 1.0, qu: 5e5, cl_int: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondensateState {
    pub t: f64,
    pub z: f64,
    pub dz: f64,
    pub lambda: [f64; 3],
    pub dlambda: [f64; 3],
}

impl CondensateState {
    /// At rest in the trap minimum with the initial radii.
    pub fn at_rest(z: f64) -> Self {
        Self { t: 0.0, z, dz: 0.0, lambda: [1.0; 3], dlambda: [0.0; 3] }
    }

    fn to_vec(self) -> [f64; 8] {
        let [lx, ly, lz] = self.lambda;
        let [vx, vy, vz] = self.dlambda;
        [self.z, self.dz, lx, ly, lz, vx, vy, vz]
    }

    fn from_vec(t: f64, y: &[f64; 8]) -> Self {
        Self { t, z: y[0], dz: y[1], lambda: [y[2], y[3], y[4]], dlambda: [y[5], y[6], y[7]] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundState {
    /// Thomas-Fermi radii in m.
    pub radii: [f64; 3],
    /// Quantum energy of the ground state, J.
    pub energy: f64,
    pub chemical_potential: f64,
}

/// Thomas-Fermi ground state of the harmonic trap `omega`.
pub fn tf_ground_state(omega: [f64; 3], params: &BecParams) -> GroundState {
    let m = params.mass;
    let omega_bar = libm::cbrt(omega[0] * omega[1] * omega[2]);
    let a_ho = libm::sqrt(HBAR / (m * omega_bar));
    let mu = 0.5
        * HBAR
        * omega_bar
        * libm::pow(15.0 * params.atom_number * params.scattering_length / a_ho, 0.4);
    let radii = omega.map(|w| libm::sqrt(2.0 * mu / m) / w);
    let energy = quantum_energy_of(radii, [0.0; 3], omega, params);
    GroundState { radii, energy, chemical_potential: mu }
}

/// `E_cl = (m/2)(ω_z²(z_A − z0)² + (ż_A − ż0)²)`.
pub fn classical_energy(state: &CondensateState, trap: &TrapState, trap_velocity: f64, params: &BecParams) -> f64 {
    classical_energy_of(state.z, state.dz, trap, trap_velocity, params.mass)
}

#[inline]
fn classical_energy_of(z: f64, dz: f64, trap: &TrapState, trap_velocity: f64, mass: f64) -> f64 {
    let w = trap.omega[2];
    let dzr = z - trap.z0;
    let dvr = dz - trap_velocity;
    0.5 * mass * (w * w * dzr * dzr + dvr * dvr)
}

/// Quantum energy of a condensate state whose radii are `λ_i r0_i`.
pub fn quantum_energy(state: &CondensateState, trap: &TrapState, r0: [f64; 3], params: &BecParams) -> Result<f64> {
    let radii = core::array::from_fn(|i| state.lambda[i] * r0[i]);
    let rates = core::array::from_fn(|i| state.dlambda[i] * r0[i]);
    quantum_energy_radii(radii, rates, trap.omega, params)
}

/// `E_qu = (m/14)Σω_i²r_i² + (m/14)Σṙ_i² + 15gN / (28π r_x r_y r_z)`.
pub fn quantum_energy_radii(radii: [f64; 3], rates: [f64; 3], omega: [f64; 3], params: &BecParams) -> Result<f64> {
    if radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Domain("radii must be positive"));
    }
    Ok(quantum_energy_of(radii, rates, omega, params))
}

#[inline]
fn quantum_energy_of(radii: [f64; 3], rates: [f64; 3], omega: [f64; 3], params: &BecParams) -> f64 {
    let m = params.mass;
    let pot: f64 = (0..3).map(|i| omega[i] * omega[i] * radii[i] * radii[i]).sum();
    let kin: f64 = rates.iter().map(|v| v * v).sum();
    let int = 15.0 * params.coupling() * params.atom_number / (28.0 * PI * radii[0] * radii[1] * radii[2]);
    m / 14.0 * (pot + kin) + int
}

/// One recorded grid point of a transport.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub u: f64,
    pub du: f64,
    pub trap: TrapState,
    pub state: CondensateState,
    pub radii: [f64; 3],
    pub e_cl: f64,
    pub e_qu: f64,
}

/// Transport simulation along one ramp.
pub struct Transport<'a, T: TrapModel + ?Sized> {
    spline: &'a Spline,
    trap: &'a T,
    params: BecParams,
    omega0: [f64; 3],
    r0: [f64; 3],
}

impl<'a, T: TrapModel + ?Sized> Transport<'a, T> {
    pub fn new(spline: &'a Spline, trap: &'a T, params: &BecParams) -> Self {
        let omega0 = trap.initial().omega;
        let r0 = tf_ground_state(omega0, params).radii;
        Self { spline, trap, params: *params, omega0, r0 }
    }

    pub fn initial_radii(&self) -> [f64; 3] {
        self.r0
    }

    /// State at rest in the initial trap minimum with `λ = 1`.
    pub fn initial_state(&self) -> Result<CondensateState> {
        let (u, du) = self.spline.value_and_rate(0.0);
        let trap = self.trap.trap_at(u)?;
        let mut s = CondensateState::at_rest(trap.z0);
        s.dz = trap.velocity(du);
        Ok(s)
    }

    fn rhs(&self, t: f64, y: &[f64; 8]) -> Result<[f64; 8]> {
        let trap = self.trap.trap_at(self.spline.value_clamped(t))?;
        let w = trap.omega;
        let prod = y[2] * y[3] * y[4];
        let mut f = [0.0; 8];
        f[0] = y[1];
        f[1] = -w[2] * w[2] * (y[0] - trap.z0);
        for i in 0..3 {
            let l = y[2 + i];
            f[2 + i] = y[5 + i];
            f[5 + i] = self.omega0[i] * self.omega0[i] / (l * prod) - w[i] * w[i] * l;
        }
        Ok(f)
    }

    fn point(&self, step: usize, state: CondensateState) -> Result<TrajectoryPoint> {
        let (u, du) = self.spline.value_and_rate(state.t);
        let trap = self.trap.trap_at(u)?;
        let radii = core::array::from_fn(|i| state.lambda[i] * self.r0[i]);
        let rates = core::array::from_fn(|i| state.dlambda[i] * self.r0[i]);
        Ok(TrajectoryPoint {
            step,
            u,
            du,
            trap,
            state,
            radii,
            e_cl: classical_energy_of(state.z, state.dz, &trap, trap.velocity(du), self.params.mass),
            e_qu: quantum_energy_of(radii, rates, trap.omega, &self.params),
        })
    }

    /// Fixed-step RK4 from `initial` over `[initial.t, t_f]`. Returns the
    /// final state, the final grid point and `E_cl^int`, the time average of
    /// `E_cl` by composite Simpson on the RK4 grid.
    pub fn run(
        &self,
        initial: CondensateState,
        steps: usize,
        mut observer: impl FnMut(&TrajectoryPoint),
    ) -> Result<(TrajectoryPoint, f64)> {
        if steps < 2 {
            return Err(Error::Config("at least two integration steps are required"));
        }
        let t0 = initial.t;
        let t_f = self.spline.duration();
        if !(0.0..t_f).contains(&t0) {
            return Err(Error::Domain("initial time outside [0, t_f)"));
        }
        let span = t_f - t0;
        let h = span / steps as f64;
        let time = |k: usize| if k == steps { t_f } else { t0 + span * k as f64 / steps as f64 };

        let mut y = initial.to_vec();
        let mut point = self.point(0, initial)?;
        observer(&point);
        let mut quad = Simpson::new(steps);
        quad.push(point.e_cl);

        for k in 0..steps {
            let t = time(k);
            let t_mid = t + 0.5 * h;
            let t_next = time(k + 1);
            let k1 = self.rhs(t, &y)?;
            let k2 = self.rhs(t_mid, &axpy(&y, 0.5 * h, &k1))?;
            let k3 = self.rhs(t_mid, &axpy(&y, 0.5 * h, &k2))?;
            let k4 = self.rhs(t_next, &axpy(&y, h, &k3))?;
            for j in 0..8 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            if y.iter().any(|v| !v.is_finite()) || y[2..5].iter().any(|&l| l <= 0.0) {
                return Err(Error::Blowup { t: t_next });
            }
            point = self.point(k + 1, CondensateState::from_vec(t_next, &y))?;
            observer(&point);
            quad.push(point.e_cl);
        }
        Ok((point, quad.finish(h) / span))
    }
}

#[inline]
fn axpy(y: &[f64; 8], a: f64, x: &[f64; 8]) -> [f64; 8] {
    core::array::from_fn(|j| y[j] + a * x[j])
}

/// Composite Simpson accumulator on a uniform grid of `steps` intervals;
/// the last three intervals use the 3/8 rule when `steps` is odd.
struct Simpson {
    steps: usize,
    index: usize,
    sum: f64,
    tail: [f64; 4],
}

impl Simpson {
    fn new(steps: usize) -> Self {
        Self { steps, index: 0, sum: 0.0, tail: [0.0; 4] }
    }

    fn push(&mut self, f: f64) {
        let i = self.index;
        let n = self.steps;
        let simpson_end = if n % 2 == 0 { n } else { n - 3 };
        if i <= simpson_end {
            let w = if i == 0 || i == simpson_end {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            self.sum += w * f / 3.0;
        }
        if n % 2 == 1 && i >= n - 3 {
            self.tail[i - (n - 3)] = f;
        }
        self.index += 1;
    }

    fn finish(&self, h: f64) -> f64 {
        let mut total = self.sum;
        if self.steps % 2 == 1 {
            let t = &self.tail;
            total += 3.0 / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3]);
        }
        total * h
    }
}

/// Integrate a transport from rest in the initial trap. Returns the final
/// condensate state and `E_cl^int`.
pub fn integrate<T: TrapModel + ?Sized>(
    spline: &Spline,
    trap: &T,
    params: &BecParams,
    step_count: usize,
) -> Result<(CondensateState, f64)> {
    if step_count < MIN_STEPS {
        return Err(Error::Config("step count below the minimum of 1000"));
    }
    let transport = Transport::new(spline, trap, params);
    let (last, e_int) = transport.run(transport.initial_state()?, step_count, |_| {})?;
    Ok((last.state, e_int))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub e_cl: f64,
    pub e_qu: f64,
    pub e_cl_int: f64,
    pub e_qu0: f64,
    pub c_obj: f64,
    pub c_obj0: f64,
    pub properties: Properties,
}

impl EnergyReport {
    pub fn e_qu_excess(&self) -> f64 {
        self.e_qu - self.e_qu0
    }

    pub fn excess_objective(&self) -> f64 {
        self.c_obj - self.c_obj0
    }

    pub fn terms(&self) -> EnergyTerms {
        EnergyTerms { e_cl: self.e_cl, e_qu_excess: self.e_qu - self.e_qu0, e_cl_int: self.e_cl_int }
    }
}

/// `(C_obj, C_obj⁰)` with `C_obj⁰ = λ_qu E_qu⁰`.
pub fn objective(report: &EnergyReport, weights: &Weights) -> (f64, f64) {
    (
        weights.cl * report.e_cl + weights.qu * report.e_qu + weights.cl_int * report.e_cl_int,
        weights.qu * report.e_qu0,
    )
}

/// Simulate a transport and collect energies and the learned properties.
pub fn evaluate_transport<T: TrapModel + ?Sized>(
    spline: &Spline,
    trap: &T,
    params: &BecParams,
    weights: &Weights,
    step_count: usize,
) -> Result<EnergyReport> {
    let (state, e_cl_int) = integrate(spline, trap, params, step_count)?;
    let fin = FinalTrapObjective::new(trap.terminal(), params, weights);
    let r0 = tf_ground_state(trap.initial().omega, params).radii;
    let p: Properties = [
        state.z,
        state.dz,
        state.lambda[0] * r0[0],
        state.dlambda[0] * r0[0],
        state.lambda[1] * r0[1],
        state.dlambda[1] * r0[1],
        state.lambda[2] * r0[2],
        state.dlambda[2] * r0[2],
        e_cl_int,
    ];
    let terminal = trap.terminal();
    let e_cl = classical_energy(&state, &terminal, 0.0, params);
    let e_qu = quantum_energy(&state, &terminal, r0, params)?;
    let mut report = EnergyReport {
        e_cl,
        e_qu,
        e_cl_int,
        e_qu0: fin.e_qu0,
        c_obj: 0.0,
        c_obj0: 0.0,
        properties: p,
    };
    (report.c_obj, report.c_obj0) = objective(&report, weights);
    Ok(report)
}

/// Energy contributions relative to the final ground state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub e_cl: f64,
    pub e_qu_excess: f64,
    pub e_cl_int: f64,
}

/// Rebuilds the objective from (possibly sampled) end-state properties in
/// the final trap, where `ż0 = 0`. Radii are clipped below at
/// [`RADIUS_FLOOR_FRACTION`] of the final TF radii and `E_cl^int` at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalTrapObjective {
    pub weights: Weights,
    pub e_qu0: f64,
    pub c_obj0: f64,
    z0: f64,
    com_pos: f64,
    com_vel: f64,
    size_pos: [f64; 3],
    size_vel: f64,
    interaction: f64,
    radius_floor: [f64; 3],
}

impl FinalTrapObjective {
    pub fn new(terminal: TrapState, params: &BecParams, weights: &Weights) -> Self {
        let m = params.mass;
        let w = terminal.omega;
        let ground = tf_ground_state(w, params);
        Self {
            weights: *weights,
            e_qu0: ground.energy,
            c_obj0: weights.qu * ground.energy,
            z0: terminal.z0,
            com_pos: 0.5 * m * w[2] * w[2],
            com_vel: 0.5 * m,
            size_pos: w.map(|wi| m / 14.0 * wi * wi),
            size_vel: m / 14.0,
            interaction: 15.0 * params.coupling() * params.atom_number / (28.0 * PI),
            radius_floor: ground.radii.map(|r| RADIUS_FLOOR_FRACTION * r),
        }
    }

    #[inline]
    pub fn terms(&self, p: &Properties) -> EnergyTerms {
        let dz = p[0] - self.z0;
        let e_cl = self.com_pos * dz * dz + self.com_vel * p[1] * p[1];
        let rx = p[2].max(self.radius_floor[0]);
        let ry = p[4].max(self.radius_floor[1]);
        let rz = p[6].max(self.radius_floor[2]);
        let e_qu = self.size_pos[0] * rx * rx
            + self.size_pos[1] * ry * ry
            + self.size_pos[2] * rz * rz
            + self.size_vel * (p[3] * p[3] + p[5] * p[5] + p[7] * p[7])
            + self.interaction / (rx * ry * rz);
        EnergyTerms { e_cl, e_qu_excess: e_qu - self.e_qu0, e_cl_int: p[8].max(0.0) }
    }

    /// [`terms`](Self::terms) over property columns, written to the output
    /// slices; all slices share one length.
    pub fn terms_batch(&self, p: [&[f64]; PROPERTY_COUNT], e_cl: &mut [f64], e_qu_excess: &mut [f64], e_cl_int: &mut [f64]) {
        let n = e_cl.len();
        let [z, vz, rx, vx, ry, vy, rz, vzs, eint] = p.map(|c| &c[..n]);
        let [fx, fy, fz] = self.radius_floor;
        for i in 0..n {
            let dz = z[i] - self.z0;
            e_cl[i] = self.com_pos * dz * dz + self.com_vel * vz[i] * vz[i];
        }
        for i in 0..n {
            let (a, b, c) = (rx[i].max(fx), ry[i].max(fy), rz[i].max(fz));
            let e_qu = self.size_pos[0] * a * a
                + self.size_pos[1] * b * b
                + self.size_pos[2] * c * c
                + self.size_vel * (vx[i] * vx[i] + vy[i] * vy[i] + vzs[i] * vzs[i])
                + self.interaction / (a * b * c);
            e_qu_excess[i] = e_qu - self.e_qu0;
        }
        for i in 0..n {
            e_cl_int[i] = eint[i].max(0.0);
        }
    }

    #[inline]
    pub fn combine(&self, t: &EnergyTerms) -> f64 {
        let w = &self.weights;
        w.cl * t.e_cl + w.qu * (t.e_qu_excess + self.e_qu0) + w.cl_int * t.e_cl_int
    }

    /// `C_obj` for the property vector `p`.
    pub fn objective(&self, p: &Properties) -> f64 {
        self.combine(&self.terms(p))
    }
}

/// Free-function form of [`FinalTrapObjective::objective`].
pub fn properties_to_objective<T: TrapModel + ?Sized>(
    props: &Properties,
    trap: &T,
    params: &BecParams,
    weights: &Weights,
) -> f64 {
    FinalTrapObjective::new(trap.terminal(), params, weights).objective(props)
}
