//! Acquisition: arsinh-transformed expected improvement, estimated by Monte
//! Carlo over sampled end-state properties or in closed form for a scalar
//! surrogate, an optional probability-of-feasibility factor, and a
//! probe-and-refine maximizer over the parameter box.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::constants::nk_to_joule;
use crate::design::Halton;
use crate::dynamics::{EnergyTerms, FinalTrapObjective, PROPERTY_COUNT};
use crate::optim::nelder_mead_box;
use crate::ramp::ParamVector;
use crate::surrogate::{GpModel, Normal, PredictWorkspace};
use crate::{Error, Result};

/// Default softening scale of the transform, in nK.
pub const DEFAULT_SCALE_NK: f64 = 1e-3;

/// `g(C) = asinh((C − C_obj0) / s0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    /// Lower bound of the objective, J.
    pub c_obj0: f64,
    /// Softening scale, J.
    pub scale: f64,
}

impl TransformSpec {
    pub fn new(c_obj0: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !c_obj0.is_finite() {
            return Err(Error::Config("transform needs a finite offset and a positive scale"));
        }
        Ok(Self { c_obj0, scale })
    }

    pub fn with_default_scale(c_obj0: f64) -> Self {
        Self { c_obj0, scale: nk_to_joule(DEFAULT_SCALE_NK) }
    }

    #[inline]
    pub fn apply(&self, c: f64) -> f64 {
        libm::asinh((c - self.c_obj0) / self.scale)
    }

    #[inline]
    pub fn inverse(&self, g: f64) -> f64 {
        self.c_obj0 + self.scale * libm::sinh(g)
    }
}

/// Thresholds of guided optimization, all in J. A transport is feasible when
/// every energy lies strictly below its threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintSet {
    pub e_cl_max: f64,
    pub e_qu_excess_max: f64,
    pub e_cl_int_max: f64,
    pub enabled: bool,
}

impl ConstraintSet {
    pub fn new(e_cl_max: f64, e_qu_excess_max: f64, e_cl_int_max: f64, enabled: bool) -> Result<Self> {
        if [e_cl_max, e_qu_excess_max, e_cl_int_max].iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("constraint thresholds must be positive"));
        }
        Ok(Self { e_cl_max, e_qu_excess_max, e_cl_int_max, enabled })
    }

    pub fn disabled() -> Self {
        Self { e_cl_max: f64::INFINITY, e_qu_excess_max: f64::INFINITY, e_cl_int_max: f64::INFINITY, enabled: false }
    }

    /// 10⁻³ nK, 10⁻⁵ nK and 5 nK.
    pub fn guided() -> Self {
        Self {
            e_cl_max: nk_to_joule(1e-3),
            e_qu_excess_max: nk_to_joule(1e-5),
            e_cl_int_max: nk_to_joule(5.0),
            enabled: true,
        }
    }

    #[inline]
    pub fn satisfied(&self, t: &EnergyTerms) -> bool {
        t.e_cl < self.e_cl_max && t.e_qu_excess < self.e_qu_excess_max && t.e_cl_int < self.e_cl_int_max
    }

    /// Feasibility as used by the incumbent rule; always true when disabled.
    pub fn feasible(&self, t: &EnergyTerms) -> bool {
        !self.enabled || self.satisfied(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionConfig {
    /// Monte-Carlo sample count per acquisition evaluation.
    pub samples: usize,
    /// Leading share of the samples used to rank the probes; refinement and
    /// the returned value always use all of them.
    pub screen_samples: usize,
    /// Quasi-random probes of the box.
    pub probes: usize,
    /// Gaussian perturbations of the incumbent added to the probes.
    pub incumbent_jitters: usize,
    /// Standard deviation of those perturbations, unit-box coordinates.
    pub jitter_sigma: f64,
    /// Best probes refined by local search.
    pub refinement_starts: usize,
    /// Surrogate evaluations per local search.
    pub refinement_evaluations: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        Self {
            samples: 10_000,
            screen_samples: 1_000,
            probes: 2048,
            incumbent_jitters: 16,
            jitter_sigma: 0.05,
            refinement_starts: 8,
            refinement_evaluations: 200,
        }
    }
}

/// Standard normal variates stored output-major, shared by every candidate
/// of one optimization step so the Monte-Carlo surface is a deterministic,
/// continuous function of the candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalDraws {
    outputs: usize,
    samples: usize,
    z: Vec<f64>,
}

impl NormalDraws {
    pub fn new<R: Rng + ?Sized>(outputs: usize, samples: usize, rng: &mut R) -> Self {
        let z = (0..outputs * samples).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        Self { outputs, samples, z }
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn output(&self, k: usize) -> &[f64] {
        &self.z[k * self.samples..(k + 1) * self.samples]
    }
}

/// Monte-Carlo acquisition estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct McEstimate {
    pub ei: f64,
    pub pf: f64,
    /// Standard error of the improvement mean.
    pub std_error: f64,
    /// Sample mean of the objective, J (transformed units for the scalar
    /// estimate).
    pub objective_mean: f64,
    /// Sample variance of the objective, J² (likewise).
    pub objective_variance: f64,
}

impl McEstimate {
    pub fn value(&self) -> f64 {
        self.ei * self.pf
    }
}

/// EI·PF from independent normal marginals of the nine properties.
pub fn mc_expected_improvement(
    posteriors: &[Normal],
    best_g: f64,
    transform: &TransformSpec,
    constraints: &ConstraintSet,
    objective: &FinalTrapObjective,
    draws: &NormalDraws,
) -> McEstimate {
    mc_expected_improvement_prefix(posteriors, best_g, transform, constraints, objective, draws, draws.samples)
}

/// [`mc_expected_improvement`] on the first `n` samples of `draws`.
pub fn mc_expected_improvement_prefix(
    posteriors: &[Normal],
    best_g: f64,
    transform: &TransformSpec,
    constraints: &ConstraintSet,
    objective: &FinalTrapObjective,
    draws: &NormalDraws,
    n: usize,
) -> McEstimate {
    const CHUNK: usize = 256;
    assert_eq!(posteriors.len(), PROPERTY_COUNT);
    assert!(draws.outputs >= PROPERTY_COUNT);
    let n = n.min(draws.samples);
    let means: [f64; PROPERTY_COUNT] = core::array::from_fn(|k| posteriors[k].mean);
    let sds: [f64; PROPERTY_COUNT] = core::array::from_fn(|k| posteriors[k].std_dev());
    // only samples below g⁻¹(best) can improve, so asinh runs on those alone
    let c_best = transform.inverse(best_g);
    let c_ref = objective.objective(&means);
    let check = constraints.enabled;
    let w = objective.weights;
    let (mut sum, mut sum2, mut feasible) = (0.0, 0.0, if check { 0 } else { n });
    let (mut c_sum, mut c_sum2) = (0.0, 0.0);
    let mut props = [[0.0; CHUNK]; PROPERTY_COUNT];
    let (mut e_cl, mut e_qu, mut e_int) = ([0.0; CHUNK], [0.0; CHUNK], [0.0; CHUNK]);
    let mut start = 0;
    while start < n {
        let len = CHUNK.min(n - start);
        for (k, col) in props.iter_mut().enumerate() {
            let z = &draws.output(k)[start..start + len];
            for (p, zi) in col[..len].iter_mut().zip(z) {
                *p = means[k] + sds[k] * zi;
            }
        }
        let cols: [&[f64]; PROPERTY_COUNT] = core::array::from_fn(|k| &props[k][..len]);
        objective.terms_batch(cols, &mut e_cl[..len], &mut e_qu[..len], &mut e_int[..len]);
        let mut cs = [0.0; CHUNK];
        for i in 0..len {
            cs[i] = w.cl * e_cl[i] + w.qu * (e_qu[i] + objective.e_qu0) + w.cl_int * e_int[i];
        }
        let cs = &cs[..len];
        let (mut s1, mut s2) = (0.0, 0.0);
        for &c in cs {
            let dc = c - c_ref;
            s1 += dc;
            s2 += dc * dc;
        }
        c_sum += s1;
        c_sum2 += s2;
        if check {
            feasible += (0..len)
                .filter(|&i| {
                    constraints.satisfied(&EnergyTerms { e_cl: e_cl[i], e_qu_excess: e_qu[i], e_cl_int: e_int[i] })
                })
                .count();
        }
        for &c in cs {
            if c < c_best {
                let imp = (best_g - transform.apply(c)).max(0.0);
                sum += imp;
                sum2 += imp * imp;
            }
        }
        start += len;
    }
    let nf = n as f64;
    let ei = sum / nf;
    let var = (sum2 / nf - ei * ei).max(0.0);
    let c_mean = c_sum / nf;
    McEstimate {
        ei,
        pf: if check { feasible as f64 / nf } else { 1.0 },
        std_error: libm::sqrt(var / (nf - 1.0).max(1.0)),
        objective_mean: c_ref + c_mean,
        objective_variance: (c_sum2 / nf - c_mean * c_mean).max(0.0),
    }
}

/// Monte-Carlo EI for a normal posterior of the transformed objective itself.
pub fn mc_expected_improvement_scalar(posterior: Normal, best_g: f64, draws: &NormalDraws) -> McEstimate {
    let n = draws.samples as f64;
    let sd = posterior.std_dev();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for &z in draws.output(0) {
        let imp = (best_g - (posterior.mean + sd * z)).max(0.0);
        sum += imp;
        sum2 += imp * imp;
    }
    let ei = sum / n;
    let var = (sum2 / n - ei * ei).max(0.0);
    McEstimate {
        ei,
        pf: 1.0,
        std_error: libm::sqrt(var / (n - 1.0).max(1.0)),
        objective_mean: posterior.mean,
        objective_variance: posterior.variance,
    }
}

/// Closed-form EI of a normal posterior against `best_g` (minimization).
pub fn classical_expected_improvement(posterior: Normal, best_g: f64) -> f64 {
    let sd = posterior.std_dev();
    let diff = best_g - posterior.mean;
    if !(sd > 0.0) {
        return diff.max(0.0);
    }
    let zeta = diff / sd;
    let pdf = libm::exp(-0.5 * zeta * zeta) / libm::sqrt(2.0 * PI);
    let cdf = 0.5 * libm::erfc(-zeta * FRAC_1_SQRT_2);
    (sd * (pdf + zeta * cdf)).max(0.0)
}

/// Logarithm of the standard normal expected improvement `z Φ(z) + φ(z)`,
/// finite far into the lower tail.
pub fn log_expected_improvement(z: f64) -> f64 {
    // the direct form loses about log10(z²) digits to cancellation
    if z > -20.0 {
        let pdf = libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI);
        let cdf = 0.5 * libm::erfc(-z * FRAC_1_SQRT_2);
        return libm::log(z * cdf + pdf);
    }
    // φ(z)/z² (1 − 3/z² + 15/z⁴ − 105/z⁶) asymptotically
    let r = 1.0 / (z * z);
    -0.5 * z * z - 0.5 * libm::log(2.0 * PI) + libm::log(r * (1.0 - r * (3.0 - r * (15.0 - 105.0 * r))))
}

/// Acquisition value at a candidate, plus a smooth ranking used when the
/// acquisition vanishes on every candidate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurfacePoint {
    pub value: f64,
    /// Larger is better; `-inf` when nothing is known.
    pub fallback: f64,
}

/// Log-EI of a normal approximation `N(mean, sd²)` against `best`.
fn gaussian_log_ei(mean: f64, sd: f64, best: f64) -> f64 {
    if !(sd > 0.0) {
        return if mean < best { libm::log(best - mean) } else { f64::NEG_INFINITY };
    }
    libm::log(sd) + log_expected_improvement((best - mean) / sd)
}

/// Something the maximizer can probe on the unit cube.
pub trait AcquisitionSurface {
    fn dim(&self) -> usize;
    fn evaluate(&mut self, x: &[f64]) -> SurfacePoint;
    /// Cheaper estimate used to rank probes.
    fn screen(&mut self, x: &[f64]) -> SurfacePoint {
        self.evaluate(x)
    }
}

/// Acquisition surface of a fitted surrogate.
pub struct ModelSurface<'a> {
    model: &'a GpModel,
    objective: &'a FinalTrapObjective,
    transform: TransformSpec,
    constraints: ConstraintSet,
    best_g: f64,
    draws: &'a NormalDraws,
    screen_samples: usize,
    seek_feasibility: bool,
    workspace: PredictWorkspace,
    posteriors: Vec<Normal>,
}

impl<'a> ModelSurface<'a> {
    pub fn new(
        model: &'a GpModel,
        objective: &'a FinalTrapObjective,
        transform: TransformSpec,
        constraints: ConstraintSet,
        best_g: f64,
        draws: &'a NormalDraws,
        screen_samples: usize,
    ) -> Self {
        Self {
            posteriors: vec![Normal::default(); model.output_count()],
            screen_samples,
            seek_feasibility: false,
            model,
            objective,
            transform,
            constraints,
            best_g,
            draws,
            workspace: PredictWorkspace::default(),
        }
    }

    /// Use plain EI, ignoring the constraints. Meant for constrained runs
    /// before any observation is feasible, when EI·PF is zero or sampling
    /// noise almost everywhere.
    pub fn seeking_feasibility(mut self, on: bool) -> Self {
        self.seek_feasibility = on && self.constraints.enabled && self.model.grouping().learns_properties();
        self
    }
}

impl ModelSurface<'_> {
    fn estimate(&mut self, x: &[f64], samples: usize) -> SurfacePoint {
        self.model.predict_unit(x, &mut self.workspace, &mut self.posteriors);
        if self.model.grouping().learns_properties() {
            let e = mc_expected_improvement_prefix(
                &self.posteriors,
                self.best_g,
                &self.transform,
                &self.constraints,
                self.objective,
                self.draws,
                samples,
            );
            // normal approximation of the objective, in J
            let mut fallback =
                gaussian_log_ei(e.objective_mean, libm::sqrt(e.objective_variance), self.transform.inverse(self.best_g));
            if self.constraints.enabled && !self.seek_feasibility {
                fallback += libm::log(e.pf.max(0.5 / samples as f64));
            }
            let value = if self.seek_feasibility { e.ei } else { e.value() };
            SurfacePoint { value, fallback }
        } else {
            let p = self.posteriors[0];
            SurfacePoint {
                value: classical_expected_improvement(p, self.best_g),
                fallback: gaussian_log_ei(p.mean, p.std_dev(), self.best_g),
            }
        }
    }
}

impl AcquisitionSurface for ModelSurface<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn evaluate(&mut self, x: &[f64]) -> SurfacePoint {
        self.estimate(x, self.draws.samples)
    }

    fn screen(&mut self, x: &[f64]) -> SurfacePoint {
        self.estimate(x, self.screen_samples.max(1))
    }
}

/// Outcome of [`maximize_acquisition`].
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub params: ParamVector,
    pub value: f64,
    pub evaluations: usize,
    /// True when the acquisition was zero on every candidate and the one with
    /// the best fallback ranking was returned instead.
    pub exploration_fallback: bool,
}

const JITTER_SCALES: usize = 4;

/// Maximize an acquisition surface over the unit cube: screen Halton probes
/// and Gaussian perturbations of `incumbent`, refine the best few with a
/// box-clipped Nelder–Mead, and return the best point in the parameter box.
/// Perturbation widths cycle through `jitter_sigma · 5^-j`, `j = 0..4`.
pub fn maximize_acquisition<S, R>(
    surface: &mut S,
    incumbent: Option<&[f64]>,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Proposal
where
    S: AcquisitionSurface + ?Sized,
    R: Rng + ?Sized,
{
    let dim = surface.dim();
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(cfg.probes + cfg.incumbent_jitters);
    let mut halton = Halton::new(dim, rng);
    for _ in 0..cfg.probes {
        candidates.push(halton.next_point());
    }
    if let Some(x0) = incumbent {
        for j in 0..cfg.incumbent_jitters {
            let sigma = cfg.jitter_sigma * libm::pow(0.2, (j % JITTER_SCALES) as f64);
            candidates.push(
                x0.iter().map(|&v| (v + sigma * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0)).collect(),
            );
        }
    }
    let mut evaluations = 0;
    let mut scored: Vec<(f64, f64, usize)> = candidates
        .iter()
        .enumerate()
        .map(|(i, x)| {
            evaluations += 1;
            let p = surface.screen(x);
            (sanitize(p.value), if p.fallback.is_nan() { f64::NEG_INFINITY } else { p.fallback }, i)
        })
        .collect();

    if scored.is_empty() {
        return Proposal {
            params: ParamVector::from_unit(&vec![0.5; dim]),
            value: 0.0,
            evaluations,
            exploration_fallback: true,
        };
    }
    // descending by screened value, ties broken by candidate index
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)));
    let mut starts: Vec<(f64, usize)> = Vec::new();
    for &(v, _, i) in scored.iter().take(cfg.refinement_starts.max(1)) {
        if v > 0.0 {
            evaluations += 1;
            starts.push((sanitize(surface.evaluate(&candidates[i]).value), i));
        }
    }
    if starts.is_empty() {
        // the screen may miss a narrow improvement region next to the incumbent
        for i in cfg.probes..candidates.len() {
            evaluations += 1;
            let v = sanitize(surface.evaluate(&candidates[i]).value);
            if v > 0.0 {
                starts.push((v, i));
            }
        }
        starts.truncate(cfg.refinement_starts.max(1));
    }
    starts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    if starts.first().is_none_or(|s| !(s.0 > 0.0)) {
        let best = scored.iter().max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2))).unwrap();
        return Proposal {
            params: ParamVector::from_unit(&candidates[best.2]),
            value: 0.0,
            evaluations,
            exploration_fallback: true,
        };
    }

    let mut best_x = candidates[starts[0].1].clone();
    let mut best_v = starts[0].0;
    let lo = vec![0.0; dim];
    let hi = vec![1.0; dim];
    for &(v, i) in &starts {
        if !(v > 0.0) || cfg.refinement_evaluations == 0 {
            break;
        }
        let m = nelder_mead_box(
            |x| -sanitize(surface.evaluate(x).value),
            &candidates[i],
            0.05,
            &lo,
            &hi,
            cfg.refinement_evaluations,
        );
        evaluations += m.evaluations;
        if -m.value > best_v {
            best_v = -m.value;
            best_x = m.x;
        }
    }
    Proposal { params: ParamVector::from_unit(&best_x), value: best_v, evaluations, exploration_fallback: false }
}

#[inline]
fn sanitize(v: f64) -> f64 {
    if v.is_finite() { v.max(0.0) } else { 0.0 }
}

/// Index of the incumbent: the lowest objective among feasible points when
/// constraints are enabled and any point is feasible, the lowest overall
/// otherwise. Ties go to the earliest point.
pub fn select_incumbent(objectives: &[f64], feasible: &[bool], constraints_enabled: bool) -> Option<usize> {
    let lowest = |filter: &dyn Fn(usize) -> bool| {
        (0..objectives.len())
            .filter(|&i| filter(i))
            .min_by(|&a, &b| objectives[a].total_cmp(&objectives[b]).then(a.cmp(&b)))
    };
    if constraints_enabled {
        if let Some(i) = lowest(&|i| feasible[i]) {
            return Some(i);
        }
    }
    lowest(&|_| true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{BecParams, Weights};
    use crate::trap::{GeometricTrap, TrapEndpoints, TrapModel};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn final_objective() -> FinalTrapObjective {
        let trap = GeometricTrap::new(TrapEndpoints::chip_transport());
        FinalTrapObjective::new(trap.terminal(), &BecParams::rb87(98.0, 1e5).unwrap(), &Weights::balanced())
    }

    fn ground_properties(obj: &FinalTrapObjective) -> [f64; PROPERTY_COUNT] {
        let trap = GeometricTrap::new(TrapEndpoints::chip_transport());
        let t = trap.terminal();
        let g = crate::dynamics::tf_ground_state(t.omega, &BecParams::rb87(98.0, 1e5).unwrap());
        let _ = obj;
        [t.z0, 0.0, g.radii[0], 0.0, g.radii[1], 0.0, g.radii[2], 0.0, 0.0]
    }

    #[test]
    fn transform_is_zero_at_bound_and_invertible() {
        let t = TransformSpec::with_default_scale(nk_to_joule(30.0));
        assert_eq!(t.apply(t.c_obj0), 0.0);
        for c in [-5.0, 0.0, 1e-3, 29.999, 31.0, 1e4] {
            let c = nk_to_joule(c);
            assert!(t.apply(c).is_finite());
            assert!((t.inverse(t.apply(c)) - c).abs() <= 1e-9 * c.abs().max(t.c_obj0));
        }
    }

    #[test]
    fn closed_form_symmetric_case() {
        let ei = classical_expected_improvement(Normal { mean: 1.0, variance: 4.0 }, 1.0);
        assert!((ei - 2.0 / libm::sqrt(2.0 * PI)).abs() < 1e-15);
        assert_eq!(classical_expected_improvement(Normal { mean: 2.0, variance: 0.0 }, 1.0), 0.0);
        assert_eq!(classical_expected_improvement(Normal { mean: 0.5, variance: 0.0 }, 1.0), 0.5);
    }

    #[test]
    fn zero_variance_worse_or_tied_gives_zero() {
        let obj = final_objective();
        let transform = TransformSpec::with_default_scale(obj.c_obj0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = NormalDraws::new(PROPERTY_COUNT, 500, &mut rng);
        let mut props = ground_properties(&obj);
        props[0] += 1e-6;
        let post: Vec<Normal> = props.iter().map(|&m| Normal { mean: m, variance: 0.0 }).collect();
        let g = transform.apply(obj.objective(&props));
        for best in [g, g - 0.5] {
            let e = mc_expected_improvement(&post, best, &transform, &ConstraintSet::disabled(), &obj, &draws);
            assert_eq!(e.ei, 0.0);
            assert_eq!(e.pf, 1.0);
        }
    }

    #[test]
    fn probability_of_feasibility_counts_samples() {
        let obj = final_objective();
        let transform = TransformSpec::with_default_scale(obj.c_obj0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = NormalDraws::new(PROPERTY_COUNT, 4000, &mut rng);
        let props = ground_properties(&obj);
        // COM velocity N(0, s²): E_cl = m v²/2 < thr holds with probability erf(v_max / (s√2))
        let m = BecParams::rb87(98.0, 1e5).unwrap().mass;
        let thr = nk_to_joule(1e-3);
        let v_max = libm::sqrt(2.0 * thr / m);
        let s = v_max;
        let post: Vec<Normal> = props
            .iter()
            .enumerate()
            .map(|(k, &mu)| Normal { mean: mu, variance: if k == 1 { s * s } else { 0.0 } })
            .collect();
        let cons = ConstraintSet::new(thr, 1.0, 1.0, true).unwrap();
        let e = mc_expected_improvement(&post, 10.0, &transform, &cons, &obj, &draws);
        let expect = libm::erf(FRAC_1_SQRT_2);
        assert!((e.pf - expect).abs() < 0.03, "{} vs {expect}", e.pf);
        assert!(e.value() >= 0.0 && e.value() <= e.ei);
    }

    #[test]
    fn incumbent_prefers_feasible_points() {
        let c = [3.0, 1.0, 2.0, 1.0];
        assert_eq!(select_incumbent(&c, &[false; 4], false), Some(1));
        assert_eq!(select_incumbent(&c, &[true, false, false, false], true), Some(0));
        assert_eq!(select_incumbent(&c, &[false; 4], true), Some(1));
        assert_eq!(select_incumbent(&[], &[], true), None);
    }

    struct Bump;

    impl AcquisitionSurface for Bump {
        fn dim(&self) -> usize {
            2
        }
        fn evaluate(&mut self, x: &[f64]) -> SurfacePoint {
            let d2 = (x[0] - 0.3) * (x[0] - 0.3) + (x[1] - 0.8) * (x[1] - 0.8);
            SurfacePoint { value: libm::exp(-d2 / 0.01), fallback: 0.0 }
        }
    }

    struct Flat;

    impl AcquisitionSurface for Flat {
        fn dim(&self) -> usize {
            2
        }
        fn evaluate(&mut self, x: &[f64]) -> SurfacePoint {
            SurfacePoint { value: 0.0, fallback: -(x[0] - 0.9) * (x[0] - 0.9) - (x[1] - 0.1) * (x[1] - 0.1) }
        }
    }

    #[test]
    fn maximizer_finds_bump_and_falls_back() {
        let cfg = AcquisitionConfig { probes: 256, ..AcquisitionConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = maximize_acquisition(&mut Bump, None, &cfg, &mut rng);
        let u = p.params.to_unit();
        assert!((u[0] - 0.3).abs() < 1e-3 && (u[1] - 0.8).abs() < 1e-3, "{u:?}");
        assert!(!p.exploration_fallback);

        let p = maximize_acquisition(&mut Flat, None, &cfg, &mut rng);
        assert!(p.exploration_fallback);
        let u = p.params.to_unit();
        assert!((u[0] - 0.9).abs() < 0.1 && (u[1] - 0.1).abs() < 0.1);
    }
}
