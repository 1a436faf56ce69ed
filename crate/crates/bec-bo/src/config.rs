//! Campaign configuration. One JSON document; every physical quantity
//! carries its unit in the key name.

use std::path::{Path, PathBuf};

use bec_bo_core::acquisition::{AcquisitionConfig, ConstraintSet, TransformSpec};
use bec_bo_core::constants::nk_to_joule;
use bec_bo_core::dynamics::{BecParams, Weights, DEFAULT_STEPS, MIN_STEPS};
use bec_bo_core::ramp::{SplineSpec, MAX_ORDER};
use bec_bo_core::surrogate::{FitOptions, GpGrouping};
use bec_bo_core::trap::{GeometricTrap, TrapEndpoints};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapConfig {
    pub omega_i_hz: [f64; 3],
    pub omega_f_hz: [f64; 3],
    pub z0_i_mm: f64,
    pub z0_f_mm: f64,
}

impl Default for TrapConfig {
    fn default() -> Self {
        Self { omega_i_hz: [15.0, 615.0, 617.0], omega_f_hz: [10.0, 33.0, 31.0], z0_i_mm: 0.45, z0_f_mm: 1.65 }
    }
}

impl TrapConfig {
    pub fn endpoints(&self) -> Result<TrapEndpoints> {
        Ok(TrapEndpoints::from_hz_mm(self.omega_i_hz, self.omega_f_hz, self.z0_i_mm, self.z0_f_mm)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BecConfig {
    pub a_s_a0: f64,
    pub atom_number: f64,
}

impl Default for BecConfig {
    fn default() -> Self {
        Self { a_s_a0: 98.0, atom_number: 1e5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplineConfig {
    pub order: usize,
    pub num_free_control: usize,
    pub num_free_knots: usize,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self { order: 4, num_free_control: 10, num_free_knots: 5 }
    }
}

impl SplineConfig {
    /// Short label used in file names, e.g. `n4_c10_k5`.
    pub fn label(&self) -> String {
        format!("n{}_c{}_k{}", self.order, self.num_free_control, self.num_free_knots)
    }

    pub fn spec(&self, duration_ms: f64) -> Result<SplineSpec> {
        Ok(SplineSpec::new(self.order, self.num_free_control, self.num_free_knots, duration_ms * 1e-3)?)
    }

    pub fn dim(&self) -> usize {
        self.num_free_control + self.num_free_knots
    }
}

/// Objective weights: a named preset or explicit values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsConfig {
    Preset(WeightPreset),
    Explicit { cl: f64, qu: f64, cl_int: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightPreset {
    /// `[1, 3.3, 5.5e-4]`
    Balanced,
    /// `[1, 5e5, 1e-3]`
    Quantum,
    /// `λ_cl / threshold_cl` scaling of the constraint thresholds: every
    /// energy at its threshold contributes equally.
    Guided,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self::Preset(WeightPreset::Balanced)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstraintConfig {
    pub enabled: bool,
    pub e_cl_max_nk: f64,
    pub e_qu_excess_max_nk: f64,
    pub e_cl_int_max_nk: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self { enabled: false, e_cl_max_nk: 1e-3, e_qu_excess_max_nk: 1e-5, e_cl_int_max_nk: 5.0 }
    }
}

impl ConstraintConfig {
    pub fn constraint_set(&self) -> Result<ConstraintSet> {
        Ok(ConstraintSet::new(
            nk_to_joule(self.e_cl_max_nk),
            nk_to_joule(self.e_qu_excess_max_nk),
            nk_to_joule(self.e_cl_int_max_nk),
            self.enabled,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AcquisitionSection {
    pub samples: usize,
    pub screen_samples: usize,
    pub probes: usize,
    pub incumbent_jitters: usize,
    pub jitter_sigma: f64,
    pub refinement_starts: usize,
    pub refinement_evaluations: usize,
    pub transform_scale_nk: f64,
}

impl Default for AcquisitionSection {
    fn default() -> Self {
        let a = AcquisitionConfig::default();
        Self {
            samples: a.samples,
            screen_samples: a.screen_samples,
            probes: a.probes,
            incumbent_jitters: a.incumbent_jitters,
            jitter_sigma: a.jitter_sigma,
            refinement_starts: a.refinement_starts,
            refinement_evaluations: a.refinement_evaluations,
            transform_scale_nk: bec_bo_core::acquisition::DEFAULT_SCALE_NK,
        }
    }
}

impl AcquisitionSection {
    pub fn acquisition(&self) -> AcquisitionConfig {
        AcquisitionConfig {
            samples: self.samples,
            screen_samples: self.screen_samples,
            probes: self.probes,
            incumbent_jitters: self.incumbent_jitters,
            jitter_sigma: self.jitter_sigma,
            refinement_starts: self.refinement_starts,
            refinement_evaluations: self.refinement_evaluations,
        }
    }

    pub fn transform(&self, c_obj0: f64) -> Result<TransformSpec> {
        Ok(TransformSpec::new(c_obj0, nk_to_joule(self.transform_scale_nk))?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateSection {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Hyperparameters are re-optimized at every step while the dataset holds
    /// at most this many points...
    pub refit_every_step_until: usize,
    /// ...and every `refit_period` steps afterwards.
    pub refit_period: usize,
}

impl Default for SurrogateSection {
    fn default() -> Self {
        let f = FitOptions::default();
        Self { restarts: f.restarts, max_iterations: f.max_iterations, refit_every_step_until: 200, refit_period: 5 }
    }
}

impl SurrogateSection {
    pub fn fit_options(&self) -> FitOptions {
        FitOptions { restarts: self.restarts, max_iterations: self.max_iterations, optimize: true }
    }
}

fn default_durations() -> Vec<f64> {
    vec![150.0]
}

fn default_modes() -> Vec<String> {
    vec!["three_gps".into()]
}

fn default_budget() -> usize {
    500
}

fn default_seeds() -> Vec<u64> {
    (1..=8).collect()
}

fn default_steps() -> usize {
    DEFAULT_STEPS
}

fn default_splines() -> Vec<SplineConfig> {
    vec![SplineConfig::default()]
}

fn default_true() -> bool {
    true
}

fn default_output() -> PathBuf {
    PathBuf::from("bec_bo_output")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub trap: TrapConfig,
    #[serde(default)]
    pub bec: BecConfig,
    #[serde(default = "default_splines")]
    pub splines: Vec<SplineConfig>,
    #[serde(default = "default_durations")]
    pub durations_ms: Vec<f64>,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub constraints: ConstraintConfig,
    #[serde(default = "default_modes")]
    pub modes: Vec<String>,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Latin-hypercube points before the first surrogate; twice the
    /// parameter count when absent.
    #[serde(default)]
    pub initial_design: Option<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_steps")]
    pub integrator_steps: usize,
    #[serde(default)]
    pub acquisition: AcquisitionSection,
    #[serde(default)]
    pub surrogate: SurrogateSection,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Record per-call wall-clock times. Switching this off writes zeros,
    /// which makes history files byte-for-byte reproducible.
    #[serde(default = "default_true")]
    pub record_wall_time: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("empty config deserializes")
    }
}

impl CampaignConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.trap.endpoints()?;
        self.bec_params()?;
        self.weights()?;
        self.constraints.constraint_set()?;
        if self.splines.is_empty() || self.durations_ms.is_empty() || self.modes.is_empty() || self.seeds.is_empty() {
            return bad("splines, durations_ms, modes and seeds must be non-empty".into());
        }
        for s in &self.splines {
            if s.order < 4 || s.order > MAX_ORDER {
                return bad(format!("spline order {} outside [4, {MAX_ORDER}]", s.order));
            }
            s.spec(self.durations_ms[0])?;
            let n_init = self.initial_design_size(s);
            if self.budget < n_init {
                return bad(format!("budget {} is below the initial design size {n_init}", self.budget));
            }
            if n_init == 0 {
                return bad("the initial design needs at least one point".into());
            }
        }
        for &d in &self.durations_ms {
            if !(1.0..=1e4).contains(&d) {
                return bad(format!("duration {d} ms outside [1, 10000] ms"));
            }
        }
        for m in &self.modes {
            if GpGrouping::from_name(m).is_none() {
                return bad(format!("unknown mode '{m}'"));
            }
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be pairwise distinct".into());
        }
        if self.integrator_steps < MIN_STEPS {
            return bad(format!("integrator_steps must be at least {MIN_STEPS}"));
        }
        let a = &self.acquisition;
        if a.samples < 2 || a.probes == 0 || !(a.transform_scale_nk > 0.0) || !(a.jitter_sigma >= 0.0) {
            return bad("acquisition needs samples ≥ 2, probes ≥ 1, positive scale".into());
        }
        if self.surrogate.refit_period == 0 {
            return bad("surrogate.refit_period must be positive".into());
        }
        Ok(())
    }

    pub fn initial_design_size(&self, spline: &SplineConfig) -> usize {
        self.initial_design.unwrap_or(2 * spline.dim())
    }

    pub fn bec_params(&self) -> Result<BecParams> {
        Ok(BecParams::rb87(self.bec.a_s_a0, self.bec.atom_number)?)
    }

    pub fn trap_model(&self) -> Result<GeometricTrap> {
        Ok(GeometricTrap::new(self.trap.endpoints()?))
    }

    pub fn weights(&self) -> Result<Weights> {
        let w = match self.weights {
            WeightsConfig::Preset(WeightPreset::Balanced) => Weights::balanced(),
            WeightsConfig::Preset(WeightPreset::Quantum) => Weights::quantum(),
            WeightsConfig::Preset(WeightPreset::Guided) => {
                let c = &self.constraints;
                Weights::new(1.0, c.e_cl_max_nk / c.e_qu_excess_max_nk, c.e_cl_max_nk / c.e_cl_int_max_nk)?
            }
            WeightsConfig::Explicit { cl, qu, cl_int } => Weights::new(cl, qu, cl_int)?,
        };
        Ok(w)
    }

    pub fn groupings(&self) -> Vec<GpGrouping> {
        self.modes.iter().filter_map(|m| GpGrouping::from_name(m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = CampaignConfig::from_json("{}").unwrap();
        assert_eq!(c.budget, 500);
        assert_eq!(c.seeds.len(), 8);
        assert_eq!(c.weights().unwrap(), Weights::balanced());
        assert_eq!(c.initial_design_size(&c.splines[0]), 30);
    }

    #[test]
    fn unit_typos_are_rejected() {
        assert!(CampaignConfig::from_json(r#"{"durations": [150]}"#).is_err());
        assert!(CampaignConfig::from_json(r#"{"bec": {"a_s": 98, "atom_number": 1e5}}"#).is_err());
    }

    #[test]
    fn invariants_are_checked() {
        for bad in [
            r#"{"seeds": [1, 1]}"#,
            r#"{"budget": 10}"#,
            r#"{"durations_ms": [0.5]}"#,
            r#"{"modes": ["two_gps"]}"#,
            r#"{"integrator_steps": 10}"#,
            r#"{"splines": [{"order": 3, "num_free_control": 2, "num_free_knots": 0}]}"#,
        ] {
            assert!(CampaignConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn weight_forms() {
        let c = CampaignConfig::from_json(r#"{"weights": "quantum"}"#).unwrap();
        assert_eq!(c.weights().unwrap(), Weights::quantum());
        let c = CampaignConfig::from_json(r#"{"weights": {"cl": 2, "qu": 1, "cl_int": 0}}"#).unwrap();
        assert_eq!(c.weights().unwrap(), Weights::new(2.0, 1.0, 0.0).unwrap());
        let c = CampaignConfig::from_json(r#"{"weights": "guided"}"#).unwrap();
        let w = c.weights().unwrap();
        assert!((w.qu - 100.0).abs() < 1e-9 && (w.cl_int - 2e-4).abs() < 1e-15);
    }

    #[test]
    fn round_trip() {
        let c = CampaignConfig::default();
        assert_eq!(CampaignConfig::from_json(&c.to_json()).unwrap(), c);
    }
}
