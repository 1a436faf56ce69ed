//! Single-ramp simulation with trajectory and ramp export.

use std::path::Path;

use bec_bo_core::constants::joule_to_nk;
use bec_bo_core::dynamics::{evaluate_transport, EnergyReport, Transport};
use bec_bo_core::ramp::{build_spline, ParamVector};
use serde::Serialize;

use crate::config::{CampaignConfig, SplineConfig};
use crate::error::{Error, Result};

/// Every `DECIMATION`-th integrator step is written.
pub const DECIMATION: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t_s: f64,
    pub u: f64,
    pub z0_m: f64,
    #[serde(rename = "z_A_m")]
    pub z_a_m: f64,
    #[serde(rename = "z_A_minus_z0_m")]
    pub offset_m: f64,
    pub r_x_m: f64,
    pub r_y_m: f64,
    pub r_z_m: f64,
    #[serde(rename = "E_cl_nK")]
    pub e_cl_nk: f64,
    #[serde(rename = "E_qu_nK")]
    pub e_qu_nk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RampRow {
    pub t_s: f64,
    pub u: f64,
    pub du_per_s: f64,
    pub d2u_per_s2: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub trajectory: Vec<TrajectoryRow>,
    pub ramp: Vec<RampRow>,
    pub report: EnergyReport,
}

/// Simulate one ramp of the given spline and duration. A blow-up is
/// returned as a runtime error naming the time it happened.
pub fn simulate_once(cfg: &CampaignConfig, spline: &SplineConfig, t_f_ms: f64, p: &ParamVector) -> Result<Simulation> {
    if p.len() != spline.dim() {
        return Err(Error::Config(format!(
            "{} parameters given, spline {} needs {}",
            p.len(),
            spline.label(),
            spline.dim()
        )));
    }
    let spec = spline.spec(t_f_ms)?;
    let ramp_fn = build_spline(p, &spec)?;
    let trap = cfg.trap_model()?;
    let params = cfg.bec_params()?;
    let steps = cfg.integrator_steps;
    let failed = |e: bec_bo_core::Error| {
        Error::Runtime(format!("simulation failed ({e}); an optimization run would record the sentinel objective"))
    };

    let transport = Transport::new(&ramp_fn, &trap, &params);
    let mut trajectory = Vec::with_capacity(steps / DECIMATION + 1);
    transport
        .run(transport.initial_state().map_err(failed)?, steps, |pt| {
            if pt.step % DECIMATION == 0 {
                trajectory.push(TrajectoryRow {
                    t_s: pt.state.t,
                    u: pt.u,
                    z0_m: pt.trap.z0,
                    z_a_m: pt.state.z,
                    offset_m: pt.state.z - pt.trap.z0,
                    r_x_m: pt.radii[0],
                    r_y_m: pt.radii[1],
                    r_z_m: pt.radii[2],
                    e_cl_nk: joule_to_nk(pt.e_cl),
                    e_qu_nk: joule_to_nk(pt.e_qu),
                });
            }
        })
        .map_err(failed)?;
    let report = evaluate_transport(&ramp_fn, &trap, &params, &cfg.weights()?, steps).map_err(failed)?;

    let ramp = trajectory
        .iter()
        .map(|row| {
            let d = |k| ramp_fn.eval_derivative(row.t_s, k);
            Ok(RampRow { t_s: row.t_s, u: row.u, du_per_s: d(1)?, d2u_per_s2: d(2)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Simulation { trajectory, ramp, report })
}

fn write<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl Simulation {
    pub fn write(&self, trajectory: &Path, ramp: &Path) -> Result<()> {
        write(trajectory, &self.trajectory)?;
        write(ramp, &self.ramp)
    }

    /// Energy report in nK, one quantity per line.
    pub fn report_text(&self) -> String {
        let r = &self.report;
        format!(
            "E_cl          {:.6e} nK\nE_qu - E_qu0  {:.6e} nK\nE_cl_int      {:.6e} nK\nE_qu0         {:.6e} nK\nC - C0        {:.6e} nK\n",
            joule_to_nk(r.e_cl),
            joule_to_nk(r.e_qu_excess()),
            joule_to_nk(r.e_cl_int),
            joule_to_nk(r.e_qu0),
            joule_to_nk(r.excess_objective()),
        )
    }
}
