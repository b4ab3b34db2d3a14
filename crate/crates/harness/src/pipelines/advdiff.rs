//! Dissipation times, enhanced decay rates and high-Sobolev decay constants
//! of a passive scalar over an η sweep.

use std::sync::Mutex;

use reconlab_core::advdiff::{
    dissipation_time, fit_decay_rate, hs_decay_constant, project_streamline_average, rate_exponent,
    run_decay, AdvDiffParams, FlowSpec,
};
use reconlab_core::spectral::{Grid, SpectralField};

use super::{err_string, flow_spec, grid2, halving_bound, step_size, Values};
use crate::config::{ExperimentConfig, HorizonPolicy};
use crate::error::Result;
use crate::experiment::{FitSummary, Outcome};
use crate::jobs::{column, run_jobs, Job};

pub const GROUP: &str = "advdiff";
/// Trace samples aimed for over the horizon.
const TRACE_SAMPLES: f64 = 400.0;

/// `sin(x₁)`, projected onto zero streamline averages when requested.
pub fn datum(grid: &Grid, flow: &FlowSpec, projected: bool) -> reconlab_core::Result<SpectralField> {
    let rho = SpectralField::from_fn(grid, |x| x[0].sin());
    if projected && flow.is_shear() {
        project_streamline_average(&rho, flow)
    } else {
        Ok(rho)
    }
}

fn hs_key(s: f64) -> String {
    format!("hs_{s}")
}

struct Job1<'a> {
    cfg: &'a ExperimentConfig,
    flow: &'a FlowSpec,
    rho0: &'a SpectralField,
    dt: f64,
    traces: &'a Mutex<Vec<(String, Vec<u8>)>>,
}

impl Job1<'_> {
    fn run(&self, eta: f64) -> Result<Values, String> {
        let cfg = self.cfg;
        let mut p = AdvDiffParams::new(eta, self.dt, halving_bound(eta) * (1.0 + 1e-6) + 2.0 * self.dt);
        p.cfl_max = cfg.cfl.max(p.cfl_max);
        let t_dis = dissipation_time(self.rho0, self.flow, &p).map_err(err_string)?;
        let horizon = match cfg.horizon_policy {
            HorizonPolicy::Fixed => cfg.horizon,
            HorizonPolicy::Diffusive => cfg.horizon / eta,
            HorizonPolicy::Tdis => cfg.horizon * t_dis,
        };
        let mut v = Values::new();
        v.insert("t_dis".into(), t_dis);
        v.insert("horizon".into(), horizon);
        if horizon < 3.0 * t_dis {
            return Ok(v);
        }
        p.horizon = horizon;
        p.cadence = ((horizon / self.dt / TRACE_SAMPLES) as usize).max(1);
        let run = run_decay(self.rho0, self.flow, &p, &cfg.hs_orders, cfg.projected).map_err(err_string)?;
        let fit = fit_decay_rate(&run.trace, 2.0 * t_dis, horizon).map_err(err_string)?;
        v.insert("rate".into(), fit.rate);
        v.insert("rate_r2".into(), fit.r2);
        v.insert("rate_over_eta".into(), fit.rate / eta);
        v.insert("rate_over_sqrt_eta".into(), fit.rate / eta.sqrt());
        for &s in &cfg.hs_orders {
            let c = hs_decay_constant(&run.trace, s, fit.rate).map_err(err_string)?;
            v.insert(hs_key(s), c.value);
            v.insert(format!("hs_{s}_envelope_violation"), c.envelope_violation as u8 as f64);
        }
        let mut csv = Vec::new();
        run.trace.write_csv(&mut csv).map_err(err_string)?;
        self.traces
            .lock()
            .expect("trace list")
            .push((format!("traces/eta_{eta}.csv"), csv));
        Ok(v)
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let flow = flow_spec(cfg)?;
    let grid = grid2(cfg)?;
    let rho0 = datum(&grid, &flow, cfg.projected)?;
    let dt = step_size(cfg, &flow, &grid)?;
    let traces = Mutex::new(Vec::new());
    let job = Job1 {
        cfg,
        flow: &flow,
        rho0: &rho0,
        dt,
        traces: &traces,
    };
    let jobs: Vec<Job> = cfg.etas.iter().map(|&e| Job::eta(GROUP, e)).collect();
    let rows = run_jobs(&jobs, |j| job.run(j.eta.expect("eta job")));
    let mut out = Outcome {
        rows,
        artifacts: traces.into_inner().expect("trace list"),
        ..Default::default()
    };

    let (etas, t_dis) = column(&out.rows, GROUP, "t_dis");
    match rate_exponent(&etas, &t_dis) {
        Ok(f) => out.fits.push(FitSummary {
            name: "t_dis_exponent".into(),
            slope: f.exponent,
            intercept: f.intercept,
            r2: f.r2,
            rows: etas.len(),
        }),
        Err(e) => out.notes.push(format!("t_dis_exponent: {e}")),
    }
    let (etas, rates) = column(&out.rows, GROUP, "rate");
    if !etas.is_empty() {
        out.loglog("rate_exponent", &etas, &rates);
    }
    for &s in &cfg.hs_orders {
        let (etas, c) = column(&out.rows, GROUP, &hs_key(s));
        if etas.is_empty() {
            continue;
        }
        let inv: Vec<f64> = etas.iter().map(|e| 1.0 / e).collect();
        out.loglog(&format!("hs_{s}_growth"), &inv, &c);
    }
    Ok(out)
}
