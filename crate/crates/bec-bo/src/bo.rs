//! The optimization loop: simulate, record, refit, maximize the acquisition.

use std::time::Instant;

use bec_bo_core::acquisition::{
    maximize_acquisition, select_incumbent, AcquisitionConfig, ConstraintSet, ModelSurface, NormalDraws,
    TransformSpec,
};
use bec_bo_core::design::latin_hypercube;
use bec_bo_core::dynamics::{
    evaluate_transport, BecParams, EnergyReport, EnergyTerms, FinalTrapObjective, Properties, Weights,
};
use bec_bo_core::ramp::{build_spline, ParamVector, SplineSpec};
use bec_bo_core::surrogate::{Dataset, FitOptions, FitReport, GpGrouping, GpModel};
use bec_bo_core::trap::{GeometricTrap, TrapModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Factor between the sentinel objective of a failed simulation and the
/// worst objective of the initial design.
pub const SENTINEL_FACTOR: f64 = 1e3;

/// The expensive black box.
pub trait Simulator {
    /// Parameter count.
    fn dim(&self) -> usize;
    fn evaluate(&mut self, p: &ParamVector) -> bec_bo_core::Result<EnergyReport>;
    /// Objective in the final trap, used to rebuild `C_obj` from properties.
    fn final_objective(&self) -> FinalTrapObjective;
}

/// Ramp construction plus condensate dynamics.
#[derive(Debug, Clone)]
pub struct TransportSimulator {
    pub spec: SplineSpec,
    pub trap: GeometricTrap,
    pub params: BecParams,
    pub weights: Weights,
    pub steps: usize,
}

impl Simulator for TransportSimulator {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn evaluate(&mut self, p: &ParamVector) -> bec_bo_core::Result<EnergyReport> {
        let spline = build_spline(p, &self.spec)?;
        evaluate_transport(&spline, &self.trap, &self.params, &self.weights, self.steps)
    }

    fn final_objective(&self) -> FinalTrapObjective {
        FinalTrapObjective::new(self.trap.terminal(), &self.params, &self.weights)
    }
}

/// Counts calls of the wrapped simulator.
#[derive(Debug, Clone)]
pub struct CountingSimulator<S> {
    pub inner: S,
    pub calls: usize,
}

impl<S> CountingSimulator<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, calls: 0 }
    }
}

impl<S: Simulator> Simulator for CountingSimulator<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&mut self, p: &ParamVector) -> bec_bo_core::Result<EnergyReport> {
        self.calls += 1;
        self.inner.evaluate(p)
    }

    fn final_objective(&self) -> FinalTrapObjective {
        self.inner.final_objective()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoSettings {
    pub grouping: GpGrouping,
    /// Total simulator calls, initial design included.
    pub budget: usize,
    pub initial_design: usize,
    pub acquisition: AcquisitionConfig,
    /// Softening scale of the transform, J.
    pub transform_scale: f64,
    pub constraints: ConstraintSet,
    pub fit: FitOptions,
    pub refit_every_step_until: usize,
    pub refit_period: usize,
    pub seed: u64,
}

/// One simulator call.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// 1-based call number.
    pub iter: usize,
    pub params: ParamVector,
    pub properties: Properties,
    /// Energies in J, relative to the final ground state where applicable.
    pub terms: EnergyTerms,
    /// `C_obj`, J.
    pub objective: f64,
    pub feasible: bool,
    /// The simulation failed and sentinel values were recorded.
    pub sentinel: bool,
    /// Index of the incumbent after this call.
    pub incumbent: usize,
    /// Time of this call plus any surrogate work that followed it.
    pub wall_ms: f64,
}

/// Every call of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub seed: u64,
    pub grouping: GpGrouping,
    pub t_f_ms: f64,
    /// `C_obj⁰`, J.
    pub c_obj0: f64,
    pub records: Vec<Record>,
    pub fits: Vec<FitReport>,
}

impl History {
    pub fn incumbent(&self) -> Option<&Record> {
        self.records.last().map(|r| &self.records[r.incumbent])
    }

    /// Incumbent record after call `iter` (1-based).
    pub fn incumbent_at(&self, iter: usize) -> &Record {
        &self.records[self.records[iter - 1].incumbent]
    }

    /// Equality up to wall-clock times.
    pub fn same_outcome(&self, other: &Self) -> bool {
        let strip = |h: &Self| {
            let mut h = h.clone();
            h.records.iter_mut().for_each(|r| r.wall_ms = 0.0);
            h
        };
        strip(self) == strip(other)
    }
}

/// Optimizer state between steps.
pub struct Optimizer<S: Simulator> {
    settings: BoSettings,
    sim: S,
    objective: FinalTrapObjective,
    transform: TransformSpec,
    t_f_ms: f64,
    data: Dataset,
    records: Vec<Record>,
    fits: Vec<FitReport>,
    model: Option<GpModel>,
    candidate: Option<ParamVector>,
    sentinel: Option<(f64, Properties, EnergyTerms)>,
    rng: ChaCha8Rng,
    last_mark: Option<Instant>,
}

impl<S: Simulator> Optimizer<S> {
    pub fn new(sim: S, settings: BoSettings, t_f_ms: f64) -> Result<Self> {
        if settings.initial_design == 0 {
            return Err(Error::Config("the initial design needs at least one point".into()));
        }
        if settings.budget < settings.initial_design {
            return Err(Error::Config(format!(
                "budget {} is below the initial design size {}",
                settings.budget, settings.initial_design
            )));
        }
        if settings.refit_period == 0 {
            return Err(Error::Config("refit period must be positive".into()));
        }
        let objective = sim.final_objective();
        let transform = TransformSpec::new(objective.c_obj0, settings.transform_scale)?;
        // same seed, same initial design across modes; the loop gets its own stream
        let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
        rng.set_stream(1);
        Ok(Self {
            sim,
            objective,
            transform,
            t_f_ms,
            data: Dataset::new(),
            records: Vec::new(),
            fits: Vec::new(),
            model: None,
            candidate: None,
            sentinel: None,
            rng,
            last_mark: None,
            settings,
        })
    }

    pub fn settings(&self) -> &BoSettings {
        &self.settings
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }

    pub fn model(&self) -> Option<&GpModel> {
        self.model.as_ref()
    }

    /// Next point to simulate, once the initial design is done.
    pub fn candidate(&self) -> Option<&ParamVector> {
        self.candidate.as_ref()
    }

    pub fn simulator(&self) -> &S {
        &self.sim
    }

    pub fn transform(&self) -> &TransformSpec {
        &self.transform
    }

    pub fn is_done(&self) -> bool {
        self.records.len() >= self.settings.budget
    }

    /// Evaluate the Latin-hypercube design, replace failures by the
    /// sentinel, and prepare the first candidate.
    pub fn initialize(&mut self) -> Result<()> {
        if !self.records.is_empty() {
            return Ok(());
        }
        let mut design_rng = ChaCha8Rng::seed_from_u64(self.settings.seed);
        let design = latin_hypercube(self.settings.initial_design, self.sim.dim(), &mut design_rng);
        let mut outcomes = Vec::with_capacity(design.len());
        for x in design {
            let p = ParamVector::from_unit(&x);
            let start = Instant::now();
            let report = self.sim.evaluate(&p);
            outcomes.push((p, report, start.elapsed().as_secs_f64() * 1e3));
        }
        let worst = outcomes
            .iter()
            .filter_map(|(_, r, _)| r.as_ref().ok())
            .max_by(|a, b| a.c_obj.total_cmp(&b.c_obj))
            .ok_or_else(|| Error::Runtime("every simulation of the initial design failed".into()))?;
        self.sentinel = Some((SENTINEL_FACTOR * worst.c_obj, worst.properties, worst.terms()));
        for (p, report, ms) in outcomes {
            self.push(p, report.ok(), ms);
        }
        self.mark();
        if !self.is_done() {
            self.propose()?;
        }
        self.finish_mark();
        Ok(())
    }

    /// One optimization step: simulate the candidate, record it, and
    /// prepare the next candidate unless the budget is spent. Returns
    /// whether more steps remain.
    pub fn step(&mut self) -> Result<bool> {
        if self.records.is_empty() {
            self.initialize()?;
            return Ok(!self.is_done());
        }
        if self.is_done() {
            return Ok(false);
        }
        let p = self.candidate.take().ok_or_else(|| Error::Runtime("no candidate to evaluate".into()))?;
        let start = Instant::now();
        let report = self.sim.evaluate(&p).ok();
        self.push(p, report, 0.0);
        self.last_mark = Some(start);
        if !self.is_done() {
            self.propose()?;
        }
        self.finish_mark();
        Ok(!self.is_done())
    }

    pub fn run(mut self) -> Result<History> {
        while self.step()? {}
        Ok(self.into_history())
    }

    pub fn into_history(self) -> History {
        History {
            seed: self.settings.seed,
            grouping: self.settings.grouping,
            t_f_ms: self.t_f_ms,
            c_obj0: self.objective.c_obj0,
            records: self.records,
            fits: self.fits,
        }
    }

    fn mark(&mut self) {
        self.last_mark = Some(Instant::now());
    }

    fn finish_mark(&mut self) {
        if let (Some(t), Some(r)) = (self.last_mark.take(), self.records.last_mut()) {
            r.wall_ms += t.elapsed().as_secs_f64() * 1e3;
        }
    }

    fn push(&mut self, p: ParamVector, report: Option<EnergyReport>, wall_ms: f64) {
        let (objective, properties, terms, sentinel) = match report {
            Some(r) => (r.c_obj, r.properties, r.terms(), false),
            None => {
                let (c, props, terms) = self.sentinel.expect("sentinel is set after the initial design");
                (c, props, terms, true)
            }
        };
        let feasible = self.settings.constraints.satisfied(&terms);
        self.data.push(p.clone(), properties, objective);
        let objectives = self.data.objective();
        let flags: Vec<bool> = self.records.iter().map(|r| r.feasible).chain([feasible]).collect();
        let incumbent = select_incumbent(objectives, &flags, self.settings.constraints.enabled)
            .expect("dataset is non-empty");
        self.records.push(Record {
            iter: self.records.len() + 1,
            params: p,
            properties,
            terms,
            objective,
            feasible,
            sentinel,
            incumbent,
            wall_ms,
        });
    }

    fn propose(&mut self) -> Result<()> {
        let n = self.data.len();
        let s = &self.settings;
        let optimize =
            self.model.is_none() || n <= s.refit_every_step_until || (n - s.refit_every_step_until) % s.refit_period == 0;
        let options = FitOptions { optimize, ..s.fit.clone() };
        match GpModel::fit(&self.data, s.grouping, &self.transform, &options, self.model.as_ref(), &mut self.rng) {
            Ok((model, report)) => {
                self.model = Some(model);
                self.fits.push(report);
            }
            // keep the previous surrogate when the new covariance cannot be factorized
            Err(e) if self.model.is_none() => return Err(e.into()),
            Err(_) => {}
        }
        let model = self.model.as_ref().expect("model present");
        let inc = self.records.last().expect("records present").incumbent;
        let best_g = self.transform.apply(self.data.objective()[inc]);
        let draws = if s.grouping.learns_properties() {
            NormalDraws::new(model.output_count(), s.acquisition.samples, &mut self.rng)
        } else {
            NormalDraws::new(1, 0, &mut self.rng)
        };
        let seek = s.constraints.enabled && !self.records.iter().any(|r| r.feasible);
        let mut surface =
            ModelSurface::new(model, &self.objective, self.transform, s.constraints, best_g, &draws, s.acquisition.screen_samples)
                .seeking_feasibility(seek);
        let incumbent_x = self.data.unit_inputs()[inc].clone();
        let proposal = maximize_acquisition(&mut surface, Some(&incumbent_x), &s.acquisition, &mut self.rng);
        self.candidate = Some(proposal.params);
        Ok(())
    }
}
