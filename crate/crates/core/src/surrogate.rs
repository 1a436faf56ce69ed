//! Multi-output Gaussian-process surrogate.
//!
//! Outputs are partitioned into groups. All outputs of one group share a
//! Matérn-5/2 kernel with automatic relevance determination, its
//! hyperparameters and a single Cholesky factorization of the training
//! covariance; each output only adds its own weight vector. Outputs are
//! standardized per fit. Cross-output posterior correlations are not
//! modelled.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, RngCore};

use crate::acquisition::TransformSpec;
use crate::dynamics::{Properties, PROPERTY_COUNT};
use crate::linalg::{dot, Cholesky};
use crate::optim::{lbfgs_box, LbfgsOptions};
use crate::ramp::ParamVector;
use crate::{Error, Result};

pub const LENGTH_SCALE_BOUNDS: (f64, f64) = (1e-2, 1e2);
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (1e-3, 1e3);
pub const NOISE_VARIANCE_BOUNDS: (f64, f64) = (1e-10, 1e-1);

const SQRT5: f64 = 2.236_067_977_499_79;

/// How the nine learned properties are split over GPs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GpGrouping {
    /// One GP with all nine outputs.
    OneGp,
    /// Centre of mass, size, and integrated classical energy.
    ThreeGps,
    /// Nine independent scalar GPs.
    NineScalar,
    /// A single scalar GP on the transformed objective.
    ClassicalScalar,
}

impl GpGrouping {
    pub const ALL: [GpGrouping; 4] = [Self::ClassicalScalar, Self::OneGp, Self::ThreeGps, Self::NineScalar];

    /// Output indices of each group.
    pub fn groups(self) -> Vec<Vec<usize>> {
        match self {
            Self::OneGp => vec![(0..PROPERTY_COUNT).collect()],
            Self::ThreeGps => vec![vec![0, 1], (2..8).collect(), vec![8]],
            Self::NineScalar => (0..PROPERTY_COUNT).map(|i| vec![i]).collect(),
            Self::ClassicalScalar => vec![vec![0]],
        }
    }

    pub fn learns_properties(self) -> bool {
        self != Self::ClassicalScalar
    }

    pub fn output_count(self) -> usize {
        if self.learns_properties() { PROPERTY_COUNT } else { 1 }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::OneGp => "one_gp",
            Self::ThreeGps => "three_gps",
            Self::NineScalar => "nine_gps",
            Self::ClassicalScalar => "classical",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == name).or(match name {
            "one_gp_9_outputs" => Some(Self::OneGp),
            "nine_scalar_gps" => Some(Self::NineScalar),
            "classical_scalar" => Some(Self::ClassicalScalar),
            _ => None,
        })
    }
}

/// Evaluated ramps: parameters, end-state properties and raw objective.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    inputs: Vec<ParamVector>,
    unit: Vec<Vec<f64>>,
    properties: Vec<Properties>,
    objective: Vec<f64>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: ParamVector, properties: Properties, objective: f64) {
        self.unit.push(p.to_unit());
        self.inputs.push(p);
        self.properties.push(properties);
        self.objective.push(objective);
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[ParamVector] {
        &self.inputs
    }

    /// Inputs mapped onto the unit cube.
    pub fn unit_inputs(&self) -> &[Vec<f64>] {
        &self.unit
    }

    pub fn properties(&self) -> &[Properties] {
        &self.properties
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    /// Training columns for `grouping`: the nine properties, or the
    /// transformed objective for the classical mode.
    pub fn targets(&self, grouping: GpGrouping, transform: &TransformSpec) -> Vec<Vec<f64>> {
        if grouping.learns_properties() {
            (0..PROPERTY_COUNT).map(|k| self.properties.iter().map(|p| p[k]).collect()).collect()
        } else {
            vec![self.objective.iter().map(|&c| transform.apply(c)).collect()]
        }
    }
}

/// Posterior marginal of one output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Normal {
    pub mean: f64,
    pub variance: f64,
}

impl Normal {
    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    /// In units of the unit input cube.
    pub length_scales: Vec<f64>,
    /// In units of the standardized output variance.
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Hyperparameters {
    pub fn isotropic(dim: usize, length_scale: f64, signal_variance: f64, noise_variance: f64) -> Self {
        Self { length_scales: vec![length_scale; dim], signal_variance, noise_variance }
    }

    fn default_for(dim: usize) -> Self {
        Self::isotropic(dim, 0.5, 1.0, 1e-6)
    }

    fn to_log(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.length_scales.iter().map(|&l| libm::log(l)).collect();
        t.push(libm::log(self.signal_variance));
        t.push(libm::log(self.noise_variance));
        t
    }

    fn from_log(t: &[f64]) -> Self {
        let d = t.len() - 2;
        Self {
            length_scales: t[..d].iter().map(|&v| libm::exp(v)).collect(),
            signal_variance: libm::exp(t[d]),
            noise_variance: libm::exp(t[d + 1]),
        }
    }

    fn log_bounds(dim: usize) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![libm::log(LENGTH_SCALE_BOUNDS.0); dim];
        let mut hi = vec![libm::log(LENGTH_SCALE_BOUNDS.1); dim];
        lo.push(libm::log(SIGNAL_VARIANCE_BOUNDS.0));
        hi.push(libm::log(SIGNAL_VARIANCE_BOUNDS.1));
        lo.push(libm::log(NOISE_VARIANCE_BOUNDS.0));
        hi.push(libm::log(NOISE_VARIANCE_BOUNDS.1));
        (lo, hi)
    }

    fn random(dim: usize, rng: &mut dyn RngCore) -> Self {
        let mut log_uniform = |lo: f64, hi: f64| libm::exp(rng.random_range(libm::log(lo)..libm::log(hi)));
        let length_scales = (0..dim).map(|_| log_uniform(0.05, 5.0)).collect();
        let signal_variance = log_uniform(0.2, 5.0);
        let noise_variance = log_uniform(1e-9, 1e-3);
        Self { length_scales, signal_variance, noise_variance }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Local ascents per group, the first from the warm start when present.
    pub restarts: usize,
    /// L-BFGS iterations per ascent.
    pub max_iterations: usize,
    /// Re-optimize hyperparameters; otherwise reuse those of the warm model.
    pub optimize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 5, max_iterations: 60, optimize: true }
    }
}

/// Diagnostics of one fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitReport {
    /// Factorizations kept in the model: one per group.
    pub factorizations: usize,
    /// Marginal-likelihood evaluations spent on hyperparameter search.
    pub likelihood_evaluations: usize,
    /// Per group: log marginal likelihood at the start of the winning ascent.
    pub lml_start: Vec<f64>,
    /// Per group: log marginal likelihood of the fitted model.
    pub lml_final: Vec<f64>,
}

/// Squared coordinate differences of every training pair `i < j`.
struct PairTable {
    n: usize,
    dim: usize,
    sq: Vec<f64>,
}

impl PairTable {
    fn new(x: &[f64], n: usize, dim: usize) -> Self {
        let mut sq = Vec::with_capacity(n * n.saturating_sub(1) / 2 * dim);
        for i in 0..n {
            let xi = &x[i * dim..(i + 1) * dim];
            for j in i + 1..n {
                let xj = &x[j * dim..(j + 1) * dim];
                sq.extend(xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)));
            }
        }
        Self { n, dim, sq }
    }
}

#[inline]
fn matern52(r: f64) -> f64 {
    let s = SQRT5 * r;
    (1.0 + s + s * s / 3.0) * libm::exp(-s)
}

/// Covariance `K + σ_n² I` for the given hyperparameters.
fn covariance(pairs: &PairTable, h: &Hyperparameters) -> Vec<f64> {
    let n = pairs.n;
    let d = pairs.dim;
    let inv2: Vec<f64> = h.length_scales.iter().map(|l| 1.0 / (l * l)).collect();
    let mut k = vec![0.0; n * n];
    let mut p = 0;
    for i in 0..n {
        k[i * n + i] = h.signal_variance + h.noise_variance;
        for j in i + 1..n {
            let r2 = dot(&pairs.sq[p * d..(p + 1) * d], &inv2);
            let v = h.signal_variance * matern52(libm::sqrt(r2));
            k[i * n + j] = v;
            k[j * n + i] = v;
            p += 1;
        }
    }
    k
}

/// Summed log marginal likelihood of the group's outputs and, optionally,
/// its gradient with respect to the log hyperparameters.
fn log_marginal_likelihood(pairs: &PairTable, ys: &[&[f64]], theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
    let n = pairs.n;
    let d = pairs.dim;
    let h = Hyperparameters::from_log(theta);
    let k = covariance(pairs, &h);
    let Ok(chol) = Cholesky::factor_with_jitter(&k, n) else {
        return f64::NEG_INFINITY;
    };
    let outputs = ys.len() as f64;
    let alphas: Vec<Vec<f64>> = ys.iter().map(|y| chol.solve(y)).collect();
    let fit: f64 = ys.iter().zip(&alphas).map(|(y, a)| dot(y, a)).sum();
    let lml = -0.5 * fit - 0.5 * outputs * chol.log_det() - 0.5 * outputs * n as f64 * libm::log(2.0 * PI);

    if let Some(grad) = grad {
        // W = Σ_o α_o α_oᵀ − O K⁻¹; dL/dθ = ½ Σ_ij W_ij ∂K_ij/∂θ
        let mut w = chol.inverse();
        for v in w.iter_mut() {
            *v *= -outputs;
        }
        for a in &alphas {
            for i in 0..n {
                let ai = a[i];
                let row = &mut w[i * n..(i + 1) * n];
                for (wij, aj) in row.iter_mut().zip(a) {
                    *wij += ai * aj;
                }
            }
        }
        let inv2: Vec<f64> = h.length_scales.iter().map(|l| 1.0 / (l * l)).collect();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let sf2 = h.signal_variance;
        let mut trace = 0.0;
        let mut signal = 0.0;
        let mut p = 0;
        let mut acc = vec![0.0; d];
        for i in 0..n {
            trace += w[i * n + i];
            for j in i + 1..n {
                let sq = &pairs.sq[p * d..(p + 1) * d];
                let r = libm::sqrt(dot(sq, &inv2));
                let s = SQRT5 * r;
                let e = libm::exp(-s);
                let wij = w[i * n + j];
                signal += wij * (1.0 + s + s * s / 3.0) * e;
                // ∂k/∂log ℓ_d = (5/3) σ² (1 + √5 r) e^{−√5 r} Δ_d² / ℓ_d²
                let c = wij * (5.0 / 3.0) * (1.0 + s) * e;
                for (a, q) in acc.iter_mut().zip(sq) {
                    *a += c * q;
                }
                p += 1;
            }
        }
        for dd in 0..d {
            // pairs appear twice in the full sum; the ½ cancels
            grad[dd] = sf2 * acc[dd] * inv2[dd];
        }
        grad[d] = sf2 * signal + 0.5 * sf2 * trace;
        grad[d + 1] = 0.5 * h.noise_variance * trace;
    }
    lml
}

#[derive(Debug, Clone, PartialEq)]
struct GroupModel {
    outputs: Vec<usize>,
    hyper: Hyperparameters,
    inv_len2: Vec<f64>,
    chol: Cholesky,
    alphas: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

/// Fitted surrogate: one [`GroupModel`] per output group.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    grouping: GpGrouping,
    dim: usize,
    n: usize,
    x: Vec<f64>,
    output_count: usize,
    groups: Vec<GroupModel>,
}

/// Scratch buffers for prediction, one per thread.
#[derive(Debug, Clone, Default)]
pub struct PredictWorkspace {
    kstar: Vec<f64>,
}

fn standardize(col: &[f64]) -> (f64, f64, Vec<f64>) {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = libm::sqrt(var);
    let scale = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    (mean, scale, col.iter().map(|v| (v - mean) / scale).collect())
}

impl GpModel {
    /// Fit the surrogate of `grouping` to a dataset.
    pub fn fit<R: Rng>(
        data: &Dataset,
        grouping: GpGrouping,
        transform: &TransformSpec,
        options: &FitOptions,
        warm: Option<&GpModel>,
        rng: &mut R,
    ) -> Result<(Self, FitReport)> {
        let columns = data.targets(grouping, transform);
        Self::fit_columns(data.unit_inputs(), &columns, grouping, options, warm, rng)
    }

    /// Fit to raw unit-cube inputs and output columns.
    pub fn fit_columns<R: Rng>(
        inputs: &[Vec<f64>],
        columns: &[Vec<f64>],
        grouping: GpGrouping,
        options: &FitOptions,
        warm: Option<&GpModel>,
        rng: &mut R,
    ) -> Result<(Self, FitReport)> {
        let groups = grouping.groups();
        let dim = inputs.first().map_or(0, Vec::len);
        let warm = warm.filter(|w| w.grouping == grouping && w.dim == dim);
        let starts: Vec<Option<Hyperparameters>> =
            (0..groups.len()).map(|g| warm.map(|w| w.groups[g].hyper.clone())).collect();
        Self::fit_inner(inputs, columns, grouping, options, starts, Some(rng))
    }

    /// Fit with given hyperparameters for every group, no search.
    pub fn fit_fixed(
        inputs: &[Vec<f64>],
        columns: &[Vec<f64>],
        grouping: GpGrouping,
        hyper: &[Hyperparameters],
    ) -> Result<(Self, FitReport)> {
        if hyper.len() != grouping.groups().len() {
            return Err(Error::Config("one hyperparameter set per group is required"));
        }
        let options = FitOptions { optimize: false, ..FitOptions::default() };
        Self::fit_inner(inputs, columns, grouping, &options, hyper.iter().cloned().map(Some).collect(), None)
    }

    /// Without `options.optimize` (or without an rng) each group keeps its
    /// start, or the default hyperparameters when it has none.
    fn fit_inner(
        inputs: &[Vec<f64>],
        columns: &[Vec<f64>],
        grouping: GpGrouping,
        options: &FitOptions,
        starts: Vec<Option<Hyperparameters>>,
        mut rng: Option<&mut dyn RngCore>,
    ) -> Result<(Self, FitReport)> {
        let n = inputs.len();
        if n == 0 {
            return Err(Error::Config("cannot fit a GP without data"));
        }
        let dim = inputs[0].len();
        if inputs.iter().any(|x| x.len() != dim) {
            return Err(Error::Config("inputs have inconsistent dimension"));
        }
        if columns.len() != grouping.output_count() || columns.iter().any(|c| c.len() != n) {
            return Err(Error::Config("output columns do not match the grouping or the data"));
        }
        if columns.iter().flatten().chain(inputs.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::Config("training data must be finite"));
        }
        // Canonical row order makes the fit independent of insertion order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            inputs[a]
                .iter()
                .zip(&inputs[b])
                .map(|(u, v)| u.total_cmp(v))
                .chain(columns.iter().map(|c| c[a].total_cmp(&c[b])))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let x: Vec<f64> = order.iter().flat_map(|&i| inputs[i].iter().copied()).collect();
        let pairs = PairTable::new(&x, n, dim);
        let standardized: Vec<(f64, f64, Vec<f64>)> = columns
            .iter()
            .map(|c| standardize(&order.iter().map(|&i| c[i]).collect::<Vec<_>>()))
            .collect();

        let mut report = FitReport::default();
        let mut groups = Vec::new();
        for (outputs, start) in grouping.groups().into_iter().zip(starts) {
            let ys: Vec<&[f64]> = outputs.iter().map(|&o| standardized[o].2.as_slice()).collect();
            let (hyper, lml_start, evals) = match rng.as_deref_mut() {
                Some(rng) if options.optimize => optimize_hyperparameters(&pairs, &ys, start, options, rng),
                _ => (start.unwrap_or_else(|| Hyperparameters::default_for(dim)), f64::NAN, 0),
            };
            report.likelihood_evaluations += evals;
            let k = covariance(&pairs, &hyper);
            let chol = Cholesky::factor_with_jitter(&k, n)?;
            report.factorizations += 1;
            let alphas: Vec<Vec<f64>> = ys.iter().map(|y| chol.solve(y)).collect();
            let lml = {
                let fit: f64 = ys.iter().zip(&alphas).map(|(y, a)| dot(y, a)).sum();
                let o = ys.len() as f64;
                -0.5 * fit - 0.5 * o * chol.log_det() - 0.5 * o * n as f64 * libm::log(2.0 * PI)
            };
            report.lml_start.push(if lml_start.is_nan() { lml } else { lml_start });
            report.lml_final.push(lml);
            groups.push(GroupModel {
                inv_len2: hyper.length_scales.iter().map(|l| 1.0 / (l * l)).collect(),
                means: outputs.iter().map(|&o| standardized[o].0).collect(),
                scales: outputs.iter().map(|&o| standardized[o].1).collect(),
                outputs,
                hyper,
                chol,
                alphas,
            });
        }
        let model = Self { grouping, dim, n, x, output_count: columns.len(), groups };
        Ok((model, report))
    }

    pub fn grouping(&self) -> GpGrouping {
        self.grouping
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn output_count(&self) -> usize {
        self.output_count
    }

    /// Hyperparameters of every group, in group order.
    pub fn hyperparameters(&self) -> Vec<&Hyperparameters> {
        self.groups.iter().map(|g| &g.hyper).collect()
    }

    /// Posterior marginals at a parameter vector.
    pub fn predict(&self, p: &ParamVector) -> Vec<Normal> {
        let mut out = vec![Normal::default(); self.output_count];
        self.predict_unit(&p.to_unit(), &mut PredictWorkspace::default(), &mut out);
        out
    }

    /// Posterior marginals at a point of the unit cube, written to `out`.
    pub fn predict_unit(&self, x: &[f64], ws: &mut PredictWorkspace, out: &mut [Normal]) {
        let n = self.n;
        let d = self.dim;
        ws.kstar.resize(n, 0.0);
        for g in &self.groups {
            let sf2 = g.hyper.signal_variance;
            for (i, k) in ws.kstar.iter_mut().enumerate() {
                let xi = &self.x[i * d..(i + 1) * d];
                let mut r2 = 0.0;
                for ((a, b), w) in x.iter().zip(xi).zip(&g.inv_len2) {
                    let t = a - b;
                    r2 += t * t * w;
                }
                *k = sf2 * matern52(libm::sqrt(r2));
            }
            let means: Vec<f64> = g.alphas.iter().map(|a| dot(&ws.kstar, a)).collect();
            g.chol.solve_lower(&mut ws.kstar);
            let var = (sf2 - dot(&ws.kstar, &ws.kstar)).max(0.0);
            for ((&o, m), (&mu, &s)) in g.outputs.iter().zip(means).zip(g.means.iter().zip(&g.scales)) {
                out[o] = Normal { mean: mu + s * m, variance: var * s * s };
            }
        }
    }
}

fn optimize_hyperparameters(
    pairs: &PairTable,
    ys: &[&[f64]],
    warm: Option<Hyperparameters>,
    options: &FitOptions,
    rng: &mut dyn RngCore,
) -> (Hyperparameters, f64, usize) {
    let dim = pairs.dim;
    let (lo, hi) = Hyperparameters::log_bounds(dim);
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    let mut evaluations = 0;
    let restarts = options.restarts.max(1);
    let first = warm.unwrap_or_else(|| Hyperparameters::default_for(dim));
    for r in 0..restarts {
        let start = if r == 0 { first.clone() } else { Hyperparameters::random(dim, rng) };
        let mut t0 = start.to_log();
        for ((v, l), h) in t0.iter_mut().zip(&lo).zip(&hi) {
            *v = v.clamp(*l, *h);
        }
        let mut start_value = f64::NAN;
        let m = lbfgs_box(
            |t, g| {
                let v = log_marginal_likelihood(pairs, ys, t, Some(g));
                g.iter_mut().for_each(|gi| *gi = -*gi);
                if start_value.is_nan() {
                    start_value = v;
                }
                -v
            },
            &t0,
            &lo,
            &hi,
            LbfgsOptions::new(options.max_iterations, 1e-4, 1e-9),
        );
        evaluations += m.evaluations;
        let lml = -m.value;
        if lml.is_finite() && best.as_ref().map_or(true, |b| lml > b.1) {
            best = Some((m.x, lml, start_value));
        }
    }
    match best {
        Some((t, _, start)) => (Hyperparameters::from_log(&t), start, evaluations),
        None => (first, f64::NEG_INFINITY, evaluations),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixed(dim: usize) -> Hyperparameters {
        Hyperparameters::isotropic(dim, 0.3, 1.0, 1e-10)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 12;
        let dim = 3;
        let x: Vec<f64> = (0..n * dim).map(|_| rng.random::<f64>()).collect();
        let y1: Vec<f64> = (0..n).map(|i| (3.0 * x[i * dim]).sin() + x[i * dim + 1]).collect();
        let y2: Vec<f64> = (0..n).map(|i| x[i * dim + 2] * x[i * dim]).collect();
        let pairs = PairTable::new(&x, n, dim);
        let ys: Vec<&[f64]> = vec![&y1, &y2];
        let theta = vec![-0.7, 0.1, -0.3, 0.2, -4.0];
        let mut g = vec![0.0; 5];
        log_marginal_likelihood(&pairs, &ys, &theta, Some(&mut g));
        for k in 0..5 {
            let h = 1e-6;
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            let fd = (log_marginal_likelihood(&pairs, &ys, &tp, None)
                - log_marginal_likelihood(&pairs, &ys, &tm, None))
                / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-5 * (1.0 + fd.abs()), "k = {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn single_point_interpolation() {
        let x = vec![vec![0.3, 0.6]];
        let y = vec![vec![2.5]];
        let h = Hyperparameters::isotropic(2, 0.2, 1.0, 1e-4);
        let (m, _) = GpModel::fit_fixed(&x, &y, GpGrouping::ClassicalScalar, &[h]).unwrap();
        let mut out = [Normal::default()];
        m.predict_unit(&x[0], &mut PredictWorkspace::default(), &mut out);
        assert!((out[0].mean - 2.5).abs() < 1e-12);
        // σ² σ_n² / (σ² + σ_n²) with unit output scale
        let expect = 1e-4 / (1.0 + 1e-4);
        assert!((out[0].variance - expect).abs() < 1e-12);
    }

    #[test]
    fn prior_reversion_far_from_data() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.01]).collect();
        let y = vec![(0..5).map(|i| 1.0 + i as f64).collect::<Vec<_>>()];
        let (m, _) = GpModel::fit_fixed(&x, &y, GpGrouping::ClassicalScalar, &[fixed(1).clone()]).unwrap();
        let mut out = [Normal::default()];
        m.predict_unit(&[0.04 + 10.0 * 0.3], &mut PredictWorkspace::default(), &mut out);
        let (mean, scale, _) = standardize(&y[0]);
        assert!((out[0].mean - mean).abs() < 1e-4 * scale);
        assert!((out[0].variance - scale * scale).abs() < 1e-4 * scale * scale);
    }

    #[test]
    fn one_dimensional_mean_decays_with_distance() {
        // +1 at the origin, −1 fifty length scales away: the standardized
        // posterior mean near the origin is k(r)/(σ² + σ_n²).
        let h = Hyperparameters::isotropic(1, 0.02, 1.0, 1e-6);
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![vec![1.0, -1.0]];
        let (m, _) = GpModel::fit_fixed(&x, &y, GpGrouping::ClassicalScalar, &[h]).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let r = k as f64 * 0.005;
            let mut out = [Normal::default()];
            m.predict_unit(&[r], &mut PredictWorkspace::default(), &mut out);
            let oracle = matern52(r / 0.02) / (1.0 + 1e-6);
            assert!((out[0].mean - oracle).abs() < 1e-12, "r = {r}");
            assert!(out[0].mean <= prev);
            prev = out[0].mean;
        }
    }

    #[test]
    fn factorizations_per_grouping() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let cols9: Vec<Vec<f64>> = (0..9).map(|k| x.iter().map(|p| p[k % 3] * (k as f64 + 1.0)).collect()).collect();
        let cols1 = vec![x.iter().map(|p| p[0] + p[1]).collect::<Vec<f64>>()];
        let opts = FitOptions { restarts: 2, max_iterations: 10, optimize: true };
        for (g, expect) in [
            (GpGrouping::OneGp, 1),
            (GpGrouping::ThreeGps, 3),
            (GpGrouping::NineScalar, 9),
            (GpGrouping::ClassicalScalar, 1),
        ] {
            let cols = if g.learns_properties() { &cols9 } else { &cols1 };
            let (_, rep) = GpModel::fit_columns(&x, cols, g, &opts, None, &mut rng).unwrap();
            assert_eq!(rep.factorizations, expect, "{g:?}");
        }
    }
}
