//! Multi-seed campaigns over splines, durations and surrogate modes.

use std::path::{Path, PathBuf};

use bec_bo_core::constants::nk_to_joule;
use bec_bo_core::surrogate::GpGrouping;
use rayon::prelude::*;

use crate::bo::{BoSettings, CountingSimulator, History, Optimizer, TransportSimulator};
use crate::config::{CampaignConfig, SplineConfig};
use crate::error::{Error, Result};
use crate::io::{self, SummaryRow};

/// Environment variable holding the worker count of a campaign.
pub const WORKERS_ENV: &str = "BEC_BO_WORKERS";

/// One cell of a campaign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub spline: SplineConfig,
    pub t_f_ms: f64,
    pub grouping: GpGrouping,
    pub seed: u64,
}

impl RunSpec {
    /// `{out}/{spline}/history_{mode}_{t_f}ms_seed{seed}.csv`
    pub fn history_path(&self, out: &Path) -> PathBuf {
        out.join(self.spline.label()).join(format!("history_{}.csv", self.stem()))
    }

    /// Companion file with parameters and end-state properties.
    pub fn params_path(&self, out: &Path) -> PathBuf {
        out.join(self.spline.label()).join(format!("params_{}.csv", self.stem()))
    }

    fn stem(&self) -> String {
        format!("{}_{}ms_seed{}", self.grouping.name(), self.t_f_ms, self.seed)
    }
}

/// Every cell in a fixed order: spline, duration, mode, seed.
pub fn plan(cfg: &CampaignConfig) -> Vec<RunSpec> {
    let mut cells = Vec::new();
    for &spline in &cfg.splines {
        for &t_f_ms in &cfg.durations_ms {
            for grouping in cfg.groupings() {
                for &seed in &cfg.seeds {
                    cells.push(RunSpec { spline, t_f_ms, grouping, seed });
                }
            }
        }
    }
    cells
}

pub fn simulator(cfg: &CampaignConfig, spline: &SplineConfig, t_f_ms: f64) -> Result<TransportSimulator> {
    Ok(TransportSimulator {
        spec: spline.spec(t_f_ms)?,
        trap: cfg.trap_model()?,
        params: cfg.bec_params()?,
        weights: cfg.weights()?,
        steps: cfg.integrator_steps,
    })
}

pub fn settings(cfg: &CampaignConfig, run: &RunSpec) -> Result<BoSettings> {
    Ok(BoSettings {
        grouping: run.grouping,
        budget: cfg.budget,
        initial_design: cfg.initial_design_size(&run.spline),
        acquisition: cfg.acquisition.acquisition(),
        transform_scale: nk_to_joule(cfg.acquisition.transform_scale_nk),
        constraints: cfg.constraints.constraint_set()?,
        fit: cfg.surrogate.fit_options(),
        refit_every_step_until: cfg.surrogate.refit_every_step_until,
        refit_period: cfg.surrogate.refit_period,
        seed: run.seed,
    })
}

/// One optimization run, without writing files.
pub fn run_one(cfg: &CampaignConfig, run: &RunSpec) -> Result<History> {
    run_counted(cfg, run).map(|(h, _)| h)
}

/// [`run_one`], also returning how often the simulator was called.
pub fn run_counted(cfg: &CampaignConfig, run: &RunSpec) -> Result<(History, usize)> {
    let sim = CountingSimulator::new(simulator(cfg, &run.spline, run.t_f_ms)?);
    let mut opt = Optimizer::new(sim, settings(cfg, run)?, run.t_f_ms)?;
    while opt.step()? {}
    let calls = opt.simulator().calls;
    let mut history = opt.into_history();
    if !cfg.record_wall_time {
        history.records.iter_mut().for_each(|r| r.wall_ms = 0.0);
    }
    Ok((history, calls))
}

/// Outcome of one cell. Failed runs keep their error message.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: RunSpec,
    pub history: std::result::Result<History, String>,
    pub simulator_calls: usize,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub runs: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl Campaign {
    pub fn failures(&self) -> impl Iterator<Item = (&RunSpec, &str)> {
        self.runs.iter().filter_map(|o| o.history.as_ref().err().map(|e| (&o.run, e.as_str())))
    }

    pub fn histories(&self) -> impl Iterator<Item = (&RunSpec, &History)> {
        self.runs.iter().filter_map(|o| o.history.as_ref().ok().map(|h| (&o.run, h)))
    }
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn check_output_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".write_probe");
    std::fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Run every cell on a pool of `workers` threads, write one history and one
/// params file per successful run and `summary.csv` over all of them.
/// A failing run is recorded and the others continue; `on_done` is called
/// as each run finishes.
pub fn run_campaign(
    cfg: &CampaignConfig,
    cells: &[RunSpec],
    workers: usize,
    on_done: impl Fn(&RunOutcome) + Sync,
) -> Result<Campaign> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    check_output_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Runtime(format!("worker pool: {e}")))?;
    let runs: Vec<RunOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|run| {
                let mut simulator_calls = 0;
                let history = run_counted(cfg, run).and_then(|(h, calls)| {
                    simulator_calls = calls;
                    io::write_history(&run.history_path(out), &h)?;
                    io::write_params(&run.params_path(out), &h)?;
                    Ok(h)
                });
                let outcome = RunOutcome { run: *run, history: history.map_err(|e| e.to_string()), simulator_calls };
                on_done(&outcome);
                outcome
            })
            .collect()
    });
    let labels: Vec<String> = runs.iter().map(|o| o.run.spline.label()).collect();
    let summary = io::summarize(
        runs.iter().zip(&labels).filter_map(|(o, l)| o.history.as_ref().ok().map(|h| (l.as_str(), h))),
    );
    io::write_summary(&out.join("summary.csv"), &summary)?;
    Ok(Campaign { runs, summary })
}
