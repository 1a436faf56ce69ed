//! Clamped B-spline ramps `u(t)` from relative parameter increments.
//!
//! A ramp of order `n` (degree `n − 1`) has `n` coincident knots at each end
//! and its first and last `n − 1` control points pinned to 0 and 1, which
//! forces `u̇ = ü = 0` at both ends. The free control points are normalized
//! cumulative sums of the first `N_c` parameters, so every ramp is monotone.
//! The remaining `N_k` parameters place the interior knots: their normalized
//! cumulative sums are the breakpoints of a monotone piecewise-linear time
//! warp, and the `N_c + n − 2` interior knots sit at the warped images of a
//! uniform grid. When `N_k` equals the interior-knot count the knots are the
//! normalized cumulative sums themselves.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Lower edge of the parameter box `[PARAM_FLOOR, 1]`.
pub const PARAM_FLOOR: f64 = 1e-3;

/// Position in `[0, 1]` of the fixed virtual last increment that closes
/// every cumulative sum before normalization.
pub const VIRTUAL_INCREMENT: f64 = 0.5;

/// Highest supported spline order.
pub const MAX_ORDER: usize = 12;

#[inline]
fn closing_increment() -> f64 {
    PARAM_FLOOR + (1.0 - PARAM_FLOOR) * VIRTUAL_INCREMENT
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineSpec {
    pub order: usize,
    pub num_free_control: usize,
    pub num_free_knots: usize,
    /// Transport duration `t_f` in seconds.
    pub duration: f64,
}

impl SplineSpec {
    pub fn new(order: usize, num_free_control: usize, num_free_knots: usize, duration: f64) -> Result<Self> {
        if !(4..=MAX_ORDER).contains(&order) {
            return Err(Error::Config("spline order must lie in 4..=12"));
        }
        if num_free_control == 0 {
            return Err(Error::Config("at least one free control point is required"));
        }
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::Config("transport duration must be positive"));
        }
        Ok(Self { order, num_free_control, num_free_knots, duration })
    }

    /// Number of optimization parameters, `N_c + N_k`.
    pub fn dim(&self) -> usize {
        self.num_free_control + self.num_free_knots
    }

    pub fn num_controls(&self) -> usize {
        2 * (self.order - 1) + self.num_free_control
    }

    pub fn num_interior_knots(&self) -> usize {
        self.num_controls() - self.order
    }

    pub fn with_duration(self, duration: f64) -> Result<Self> {
        Self::new(self.order, self.num_free_control, self.num_free_knots, duration)
    }
}

/// Relative increments, each in `[PARAM_FLOOR, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(PARAM_FLOOR..=1.0).contains(&value) {
                return Err(Error::Parameter { index, value, lo: PARAM_FLOOR, hi: 1.0 });
            }
        }
        Ok(Self(values))
    }

    /// Map a point of the unit cube onto the parameter box, clipping first.
    pub fn from_unit(x: &[f64]) -> Self {
        Self(x.iter().map(|&v| PARAM_FLOOR + (1.0 - PARAM_FLOOR) * v.clamp(0.0, 1.0)).collect())
    }

    pub fn to_unit(&self) -> Vec<f64> {
        self.0.iter().map(|&p| (p - PARAM_FLOOR) / (1.0 - PARAM_FLOOR)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Plain B-spline: `knots.len() == controls.len() + order`.
#[derive(Debug, Clone, PartialEq)]
pub struct BSpline {
    order: usize,
    knots: Vec<f64>,
    controls: Vec<f64>,
}

impl BSpline {
    pub fn new(order: usize, knots: Vec<f64>, controls: Vec<f64>) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::Config("unsupported B-spline order"));
        }
        if controls.len() < order || knots.len() != controls.len() + order {
            return Err(Error::Config("knot count must equal control count plus order"));
        }
        if knots.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Config("knot sequence must be non-decreasing"));
        }
        Ok(Self { order, knots, controls })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn controls(&self) -> &[f64] {
        &self.controls
    }

    /// Index `k` of the knot span `[t_k, t_{k+1})` containing `t`; the last
    /// non-empty span for the right end point.
    pub fn span(&self, t: f64) -> usize {
        let p = self.order - 1;
        let n = self.controls.len();
        if t >= self.knots[n] {
            return n - 1;
        }
        if t <= self.knots[p] {
            return p;
        }
        // first index in knots[p..=n] whose value exceeds t
        let upper = self.knots[p..=n].partition_point(|&k| k <= t) + p;
        upper - 1
    }

    /// de Boor evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        let p = self.order - 1;
        let k = self.span(t);
        let mut d = [0.0_f64; MAX_ORDER];
        d[..=p].copy_from_slice(&self.controls[k - p..=k]);
        for r in 1..=p {
            for j in (r..=p).rev() {
                let i = j + k - p;
                let denom = self.knots[i + p + 1 - r] - self.knots[i];
                let alpha = if denom > 0.0 { (t - self.knots[i]) / denom } else { 0.0 };
                d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
            }
        }
        d[p]
    }

    /// Non-zero basis functions `N_{k−p..=k}` at `t` (Cox–de Boor), with the
    /// span index `k`.
    pub fn basis(&self, t: f64) -> (usize, Vec<f64>) {
        let p = self.order - 1;
        let k = self.span(t);
        let mut n = alloc::vec![0.0; p + 1];
        let mut left = [0.0_f64; MAX_ORDER];
        let mut right = [0.0_f64; MAX_ORDER];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = t - self.knots[k + 1 - j];
            right[j] = self.knots[k + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        (k, n)
    }

    /// The derivative as a B-spline of one order less.
    pub fn derivative(&self) -> Result<Self> {
        if self.order < 2 {
            return Err(Error::Config("cannot differentiate a piecewise-constant spline"));
        }
        let p = (self.order - 1) as f64;
        let c = &self.controls;
        let t = &self.knots;
        let controls = (0..c.len() - 1)
            .map(|i| {
                let span = t[i + self.order] - t[i + 1];
                if span > 0.0 { p * (c[i + 1] - c[i]) / span } else { 0.0 }
            })
            .collect();
        Self::new(self.order - 1, t[1..t.len() - 1].to_vec(), controls)
    }
}

/// A transport ramp with its first two derivative splines.
#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    value: BSpline,
    first: BSpline,
    second: BSpline,
    duration: f64,
}

impl Spline {
    pub fn from_bspline(value: BSpline) -> Result<Self> {
        let first = value.derivative()?;
        let second = first.derivative()?;
        let duration = *value.knots.last().unwrap() - value.knots[0];
        Ok(Self { value, first, second, duration })
    }

    pub fn order(&self) -> usize {
        self.value.order
    }

    pub fn knots(&self) -> &[f64] {
        &self.value.knots
    }

    pub fn controls(&self) -> &[f64] {
        &self.value.controls
    }

    pub fn basis_spline(&self) -> &BSpline {
        &self.value
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::Domain("time outside [0, t_f]"));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.value.eval(t))
    }

    /// `k`-th time derivative, `k ∈ {1, 2}`.
    pub fn eval_derivative(&self, t: f64, k: usize) -> Result<f64> {
        self.check_time(t)?;
        match k {
            1 => Ok(self.first.eval(t)),
            2 => Ok(self.second.eval(t)),
            _ => Err(Error::Domain("derivative order must be 1 or 2")),
        }
    }

    /// `u` at `t` clamped into `[0, t_f]`.
    #[inline]
    pub fn value_clamped(&self, t: f64) -> f64 {
        self.value.eval(t.clamp(0.0, self.duration))
    }

    /// `(u, u̇)` at `t` clamped into `[0, t_f]`; used inside the integrator.
    #[inline]
    pub fn value_and_rate(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(0.0, self.duration);
        (self.value.eval(t), self.first.eval(t))
    }
}

/// Build the ramp for parameter vector `p`.
pub fn build_spline(p: &ParamVector, spec: &SplineSpec) -> Result<Spline> {
    let SplineSpec { order, num_free_control, duration, .. } = *spec;
    if p.len() != spec.dim() {
        return Err(Error::Config("parameter count does not match the spline spec"));
    }
    // ParamVector guarantees the box, but it can be built from raw parts in tests.
    for (index, &value) in p.as_slice().iter().enumerate() {
        if !(PARAM_FLOOR..=1.0).contains(&value) {
            return Err(Error::Parameter { index, value, lo: PARAM_FLOOR, hi: 1.0 });
        }
    }
    let (control_incs, knot_incs) = p.as_slice().split_at(num_free_control);

    let mut controls = Vec::with_capacity(spec.num_controls());
    controls.resize(order - 1, 0.0);
    controls.extend(normalized_partial_sums(control_incs));
    controls.resize(spec.num_controls(), 1.0);

    let breakpoints = normalized_partial_sums(knot_incs);
    let interior = spec.num_interior_knots();
    let mut knots = Vec::with_capacity(interior + 2 * order);
    knots.resize(order, 0.0);
    for j in 1..=interior {
        knots.push(duration * warp(&breakpoints, j, interior + 1));
    }
    knots.resize(interior + 2 * order, duration);

    Spline::from_bspline(BSpline::new(order, knots, controls)?)
}

/// `S_m / (S_N + closing increment)` for `m = 1..=N`.
fn normalized_partial_sums(incs: &[f64]) -> Vec<f64> {
    let total: f64 = incs.iter().sum::<f64>() + closing_increment();
    let mut acc = 0.0;
    incs.iter()
        .map(|&x| {
            acc += x;
            acc / total
        })
        .collect()
}

/// Piecewise-linear warp through `(m/(B+1), breakpoints[m−1])`, pinned at
/// 0 and 1, evaluated at the rational abscissa `j / denom`.
fn warp(breakpoints: &[f64], j: usize, denom: usize) -> f64 {
    let segments = breakpoints.len() + 1;
    let num = j * segments;
    let seg = num / denom;
    let frac = (num % denom) as f64 / denom as f64;
    let at = |m: usize| match m {
        0 => 0.0,
        m if m == segments => 1.0,
        m => breakpoints[m - 1],
    };
    if frac == 0.0 {
        at(seg)
    } else {
        at(seg) + frac * (at(seg + 1) - at(seg))
    }
}
